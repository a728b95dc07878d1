#include "airobject/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "airobject/config_io.hpp"
#include "airobject/diff/checkpoint.hpp"

namespace airobject {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

namespace {

constexpr const char* kConfigDirEnv = "AIROBJECT_CONFIG_DIR";
constexpr const char* kDefaultConfigName = "airobject.json";

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string features, checkpoint, descriptors, init, manifest;
  std::string stage = "both";
  std::optional<int> epochs, stage2_epochs, batch_size, seq_len, threads;
  std::optional<double> lr, rho;
  std::optional<std::string> baseline, selector;
  bool unique_features = false, best_match = false, corrupt = false, verify = false;
};

// Explicit path: as given, else under $AIROBJECT_CONFIG_DIR. No path: the
// directory's airobject.json if present, else built-in defaults.
RunConfig resolve_config(const std::string& path, ojson& source) {
  const char* dir = std::getenv(kConfigDirEnv);
  if (!path.empty()) {
    fs::path p(path);
    if (!fs::exists(p) && p.is_relative() && dir && fs::exists(fs::path(dir) / p)) p = fs::path(dir) / p;
    if (!fs::exists(p)) throw UsageError("config file not found: " + path);
    source = fs::absolute(p).string();
    return load_run_config(p);
  }
  if (dir && fs::exists(fs::path(dir) / kDefaultConfigName)) {
    source = fs::absolute(fs::path(dir) / kDefaultConfigName).string();
    return load_run_config(fs::path(dir) / kDefaultConfigName);
  }
  source = nullptr;
  return RunConfig{};
}

fs::path make_run_dir(const std::string& out, std::uint64_t seed) {
  fs::path dir;
  if (!out.empty()) {
    dir = out;
  } else {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream name;
    name << std::put_time(&tm, "%Y%m%dT%H%M%SZ") << "_seed" << seed;
    dir = fs::path("runs") / name.str();
    for (int k = 2; fs::exists(dir); ++k) dir = fs::path("runs") / (name.str() + "-" + std::to_string(k));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

/// Collects inputs/outputs and writes <command>.manifest.json on scope exit
/// of a command, whether it succeeded or not.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args)
      : command_(std::move(command)), args_(args), start_(std::chrono::steady_clock::now()) {}

  void set_dir(const fs::path& dir) { dir_ = dir; }
  void set_config(ojson config, ojson source) {
    config_ = std::move(config);
    config_source_ = std::move(source);
  }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const fs::path& p) { outputs_.push_back(p); }
  void set_status(std::string s) { status_ = std::move(s); }
  void set(const std::string& key, ojson value) { extra_[key] = std::move(value); }

  void write() const {
    if (dir_.empty()) return;
    ojson j;
    j["command"] = command_;
    j["args"] = args_;
    j["cwd"] = fs::current_path().string();
    j["config_file"] = config_source_;
    j["config"] = config_;
    j["seed"] = seed_;
    j["status"] = status_;
    auto files = [](const std::vector<fs::path>& paths) {
      ojson arr = ojson::array();
      for (const auto& p : paths) {
        ojson f;
        f["path"] = fs::absolute(p).string();
        f["fnv1a64"] = fs::exists(p) ? ojson(fnv1a64_file(p)) : ojson(nullptr);
        arr.push_back(f);
      }
      return arr;
    };
    j["inputs"] = files(inputs_);
    j["outputs"] = files(outputs_);
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    j["duration_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const fs::path path = dir_ / (command_ + ".manifest.json");
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream f(tmp);
      f << j.dump(2) << '\n';
      if (!f) throw IoError("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::chrono::steady_clock::time_point start_;
  fs::path dir_;
  ojson config_, config_source_;
  std::uint64_t seed_ = 0;
  std::vector<fs::path> inputs_, outputs_;
  std::string status_ = "ok";
  ojson extra_ = ojson::object();
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw IoError("cannot write " + path.string());
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class LossCsv {
 public:
  explicit LossCsv(const fs::path& path) : f_(path, std::ios::binary) {
    if (!f_) throw IoError("cannot write " + path.string());
    f_ << "epoch,L_s,L_d,L_m,total,positive_cosine\n";
    f_.flush();
  }
  void add(const EpochStats& s) {
    f_ << s.epoch << ',' << fmt17(s.L_s) << ',' << fmt17(s.L_d) << ',' << fmt17(s.L_m) << ',' << fmt17(s.total) << ','
       << fmt17(s.positive_cosine) << '\n';
    f_.flush();
  }

 private:
  std::ofstream f_;
};

struct LoadedModel {
  EncoderParams encoder;
  std::optional<TemporalParams> temporal;
};

ModelConfig checkpoint_model(const fs::path& path) {
  const diff::CheckpointInfo info = diff::read_checkpoint_info(path);
  ModelConfig m;
  try {
    const auto meta = nlohmann::json::parse(info.metadata_json);
    if (!meta.contains("model")) throw DataError(path.string() + ": checkpoint metadata has no model config");
    apply_json(meta.at("model"), m);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad checkpoint metadata: " + e.what());
  }
  validate(m);
  return m;
}

LoadedModel load_model(const fs::path& path) {
  const ModelConfig m = checkpoint_model(path);
  Rng rng(0);
  LoadedModel out{EncoderParams::init(m, rng), std::nullopt};
  diff::load_checkpoint(path, out.encoder.sections());
  const auto info = diff::read_checkpoint_info(path);
  if (std::find(info.sections.begin(), info.sections.end(), "temporal") != info.sections.end()) {
    out.temporal = TemporalParams::init(m.D_o);
    diff::load_checkpoint(path, out.temporal->sections());
  }
  return out;
}

void save_model(const fs::path& path, EncoderParams& enc, TemporalParams* tmp, int stage, int epoch) {
  auto sections = enc.sections();
  if (tmp) {
    for (auto& s : tmp->sections()) sections.push_back(s);
  }
  ojson meta;
  meta["model"] = to_json(enc.config);
  meta["stage"] = stage;
  meta["epoch"] = epoch;
  diff::save_checkpoint(path, sections, meta.dump());
}

void apply_eval_flags(const Options& o, EvalConfig& e) {
  if (o.rho) e.rho = *o.rho;
  if (o.seq_len) e.seq_len = *o.seq_len;
  if (o.baseline) e.baseline = parse_baseline(*o.baseline);
  if (o.unique_features) e.unique_features = true;
  if (o.selector) e.unique_selector = *o.selector == "content" ? UniqueSelector::Content : UniqueSelector::Location;
  if (o.best_match) e.best_match = true;
  if (o.threads) e.threads = *o.threads;
}

// ---- commands -------------------------------------------------------------

void cmd_synth(const Options& o, Manifest& m, std::ostream& out) {
  ojson source;
  RunConfig cfg = resolve_config(o.config, source);
  if (o.seed) cfg.synth.seed = *o.seed;
  validate(cfg.synth);
  m.set_config(to_json(cfg.synth), source);
  m.set_seed(cfg.synth.seed);
  const fs::path dir = make_run_dir(o.out, cfg.synth.seed);
  m.set_dir(dir);
  const TrackSet set = generate_synthetic(cfg.synth);
  const fs::path file = dir / "features.jsonl";
  save_tracks(set, file);
  m.output(file);
  out << "wrote " << set.tracks.size() << " tracks to " << file.string() << '\n';
}

void cmd_triangulate(const Options& o, Manifest& m, std::ostream& out) {
  ojson source;
  RunConfig cfg = resolve_config(o.config, source);
  m.set_config(to_json(cfg.model), source);
  const TrackSet set = load_tracks(o.features);
  m.input(o.features);
  const fs::path dir = make_run_dir(o.out, 0);
  m.set_dir(dir);
  const fs::path file = dir / "graphs.jsonl";
  std::ofstream f(file, std::ios::binary);
  long frames = 0;
  for (const auto& t : set.tracks) {
    for (const auto& obs : t.observations) {
      const FrameGraph g = build_frame_graph(obs, cfg.model, {t.video_id, t.object_id, obs.frame_index});
      ojson rec;
      rec["video_id"] = t.video_id;
      rec["object_id"] = t.object_id;
      rec["frame_index"] = obs.frame_index;
      ojson pos = ojson::array();
      for (Eigen::Index i = 0; i < g.size(); ++i) pos.push_back({g.positions_norm(i, 0), g.positions_norm(i, 1)});
      rec["positions"] = pos;
      ojson edges = ojson::array();
      for (Eigen::Index i = 0; i < g.size(); ++i)
        for (Eigen::Index j = i + 1; j < g.size(); ++j)
          if (g.adjacency(i, j) != 0.0) edges.push_back({i, j});
      rec["edges"] = edges;
      f << rec.dump() << '\n';
      ++frames;
    }
  }
  f.close();
  if (!f) throw IoError("cannot write " + file.string());
  m.output(file);
  out << "wrote " << frames << " frame graphs to " << file.string() << '\n';
}

void cmd_train(const Options& o, Manifest& m, std::ostream& out) {
  if (o.stage != "1" && o.stage != "2" && o.stage != "both") throw UsageError("--stage must be 1, 2 or both");
  if (o.stage == "2" && o.init.empty()) throw UsageError("--stage 2 needs --init with a stage-1 checkpoint");
  ojson source;
  RunConfig cfg = resolve_config(o.config, source);
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.stage2_epochs) cfg.train.stage2_epochs = *o.stage2_epochs;
  if (o.lr) cfg.train.lr = *o.lr;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  validate(cfg.train);

  const TrackSet set = load_tracks(o.features);
  m.input(o.features);
  std::optional<LoadedModel> init;
  if (!o.init.empty()) {
    m.input(o.init);
    init = load_model(o.init);
    cfg.model = init->encoder.config;  // the checkpoint fixes the architecture
  }
  validate(cfg.model);
  if (cfg.model.D_p != set.descriptor_dim) {
    throw DimensionError("model D_p " + std::to_string(cfg.model.D_p) + " != feature descriptor dim " +
                         std::to_string(set.descriptor_dim));
  }
  m.set_config({{"model", to_json(cfg.model)}, {"train", to_json(cfg.train)}, {"stage", o.stage}}, source);
  m.set_seed(cfg.train.seed);
  const fs::path dir = make_run_dir(o.out, cfg.train.seed);
  m.set_dir(dir);
  const fs::path ckpt = dir / "checkpoint.ckpt";

  Rng rng(cfg.train.seed);
  EncoderParams enc = init ? init->encoder : EncoderParams::init(cfg.model, rng);
  if (o.stage != "2") {
    const fs::path csv_path = dir / "loss_stage1.csv";
    LossCsv csv(csv_path);
    m.output(csv_path);
    m.output(ckpt);
    save_model(ckpt, enc, nullptr, 1, 0);  // last-good state if epoch 1 fails
    train_stage1(set, enc, cfg.train, [&](const EpochStats& s) {
      csv.add(s);
      save_model(ckpt, enc, nullptr, 1, s.epoch);
      out << "stage 1 epoch " << s.epoch << ": total " << fmt17(s.total) << '\n';
    });
  }
  if (o.stage != "1") {
    TemporalParams tmp = init && init->temporal && o.stage == "2" ? *init->temporal : TemporalParams::init(cfg.model.D_o);
    const fs::path csv_path = dir / "loss_stage2.csv";
    LossCsv csv(csv_path);
    m.output(csv_path);
    if (o.stage == "2") m.output(ckpt);
    save_model(ckpt, enc, &tmp, 2, 0);
    train_stage2(set, enc, tmp, cfg.train, [&](const EpochStats& s) {
      csv.add(s);
      save_model(ckpt, enc, &tmp, 2, s.epoch);
      out << "stage 2 epoch " << s.epoch << ": L_m " << fmt17(s.L_m) << '\n';
    });
  }
  out << "checkpoint " << ckpt.string() << '\n';
}

void cmd_encode(const Options& o, Manifest& m, std::ostream& out) {
  ojson source;
  RunConfig cfg = resolve_config(o.config, source);
  apply_eval_flags(o, cfg.eval);
  validate(cfg.eval);
  const TrackSet set = load_tracks(o.features);
  m.input(o.features);
  m.input(o.checkpoint);
  const LoadedModel model = load_model(o.checkpoint);
  if (cfg.eval.baseline == Baseline::AirObject && !model.temporal) {
    throw DataError(o.checkpoint + ": no temporal section; train stage 2 or pick --baseline 2d|3d");
  }
  m.set_config({{"model", to_json(model.encoder.config)}, {"eval", to_json(cfg.eval)}}, source);
  const fs::path dir = make_run_dir(o.out, 0);
  m.set_dir(dir);
  const auto descs = encode_tracks(set, model.encoder, model.temporal ? &*model.temporal : nullptr, cfg.eval);
  const fs::path file = dir / "descriptors.jsonl";
  save_descriptors(descs, file);
  m.output(file);
  out << "wrote " << descs.size() << " descriptors to " << file.string() << '\n';
}

void cmd_eval(const Options& o, Manifest& m, std::ostream& out) {
  const bool from_dump = !o.descriptors.empty();
  if (from_dump == (!o.features.empty() || !o.checkpoint.empty())) {
    throw UsageError("eval needs either --descriptors or both --features and --checkpoint");
  }
  if (!from_dump && (o.features.empty() || o.checkpoint.empty())) {
    throw UsageError("eval needs both --features and --checkpoint");
  }
  if (from_dump && (o.baseline || o.seq_len || o.unique_features || o.selector)) {
    throw UsageError("--baseline, --seq-len and --unique-features apply when encoding; use --features/--checkpoint");
  }
  ojson source;
  RunConfig cfg = resolve_config(o.config, source);
  apply_eval_flags(o, cfg.eval);
  validate(cfg.eval);
  m.set_config(to_json(cfg.eval), source);
  const fs::path dir = make_run_dir(o.out, 0);
  m.set_dir(dir);

  EvalReport report;
  if (from_dump) {
    m.input(o.descriptors);
    report = evaluate_descriptors(load_descriptors(o.descriptors), cfg.eval);
  } else {
    m.input(o.features);
    m.input(o.checkpoint);
    const TrackSet set = load_tracks(o.features);
    const LoadedModel model = load_model(o.checkpoint);
    if (cfg.eval.baseline == Baseline::AirObject && !model.temporal) {
      throw DataError(o.checkpoint + ": no temporal section; train stage 2 or pick --baseline 2d|3d");
    }
    report = run_benchmark(set, model.encoder, model.temporal ? &*model.temporal : nullptr, cfg.eval);
  }
  const fs::path report_path = dir / "report.json";
  const fs::path curve_path = dir / "curve.csv";
  const fs::path summary_path = dir / "summary.txt";
  write_text(report_path, report_json(report));
  write_text(curve_path, curve_csv(report.curve));
  write_text(summary_path, summary_line(report) + "\n");
  m.output(report_path);
  m.output(curve_path);
  m.output(summary_path);
  out << summary_line(report) << '\n';
}

int cmd_gradcheck(const Options& o, Manifest& m, std::ostream& out) {
  const std::uint64_t seed = o.seed.value_or(1);
  m.set_seed(seed);
  m.set_config({{"seed", seed}, {"corrupt_adjoint", o.corrupt}}, nullptr);
  const fs::path dir = make_run_dir(o.out, seed);
  m.set_dir(dir);
  const CompositeCheckResult r = check_composite_gradient(seed, o.corrupt);
  const bool pass = r.check.max_relative_error < 1e-4;
  ojson j;
  j["seed"] = seed;
  j["sample_seed"] = r.seed_used;
  j["corrupt_adjoint"] = o.corrupt;
  j["parameter_tensors"] = r.parameter_tensors;
  j["max_relative_error"] = r.check.max_relative_error;
  j["worst_parameter"] = r.check.worst_parameter;
  j["kink_margin"] = r.check.kink_margin;
  j["pass"] = pass;
  const fs::path file = dir / "gradcheck.json";
  write_text(file, j.dump(2) + "\n");
  m.output(file);
  char line[256];
  std::snprintf(line, sizeof line, "gradcheck %s: max relative error %.3e (tensor %s, sample seed %llu)",
                pass ? "PASS" : "FAIL", r.check.max_relative_error, r.check.worst_parameter.c_str(),
                static_cast<unsigned long long>(r.seed_used));
  out << line << '\n';
  if (!pass) m.set_status("failed: gradient mismatch");
  return pass ? 0 : 3;
}

int cmd_rerun(const Options& o, std::ostream& out, std::ostream& err) {
  std::ifstream in(o.manifest);
  if (!in) throw UsageError("manifest not found: " + o.manifest);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(o.manifest + ": " + e.what());
  }
  std::vector<std::string> args = j.at("args").get<std::vector<std::string>>();
  if (!o.out.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--out") {
        args[i + 1] = o.out;
        replaced = true;
      }
    }
    if (!replaced) {
      args.push_back("--out");
      args.push_back(o.out);
    }
  }
  const int code = run_cli(args, out, err);
  if (code != 0 || !o.verify) return code;
  if (o.out.empty()) throw UsageError("--verify needs --out so both runs' outputs exist");
  const std::string command = j.at("command").get<std::string>();
  const fs::path fresh = fs::path(o.out) / (command + ".manifest.json");
  std::ifstream in2(fresh);
  const auto k = nlohmann::json::parse(in2);
  const auto& a = j.at("outputs");
  const auto& b = k.at("outputs");
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].at("fnv1a64") == b[i].at("fnv1a64");
  out << (same ? "rerun outputs match" : "rerun outputs differ") << '\n';
  return same ? 0 : 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"airobject: temporally evolving graph embeddings for object identification"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "JSON config file (also looked up under $AIROBJECT_CONFIG_DIR)");
  };
  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", o.out, "output directory (default runs/<timestamp>_seed<seed>)");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic feature file");
  add_config(synth);
  add_out(synth);
  synth->add_option("--seed", o.seed, "generator seed (overrides synth.seed)");

  auto* tri = app.add_subcommand("triangulate", "write per-frame graphs (normalized positions, edges)");
  tri->add_option("--features", o.features, "feature file")->required();
  add_config(tri);
  add_out(tri);

  auto* train = app.add_subcommand("train", "train the encoder (stage 1) and temporal layer (stage 2)");
  train->add_option("--features", o.features, "feature file")->required();
  add_config(train);
  add_out(train);
  train->add_option("--stage", o.stage, "1, 2 or both")->check(CLI::IsMember({"1", "2", "both"}));
  train->add_option("--init", o.init, "start from this checkpoint");
  train->add_option("--seed", o.seed, "training seed (overrides train.seed)");
  train->add_option("--epochs", o.epochs, "epochs per stage (overrides train.epochs)");
  train->add_option("--stage2-epochs", o.stage2_epochs, "stage-2 epochs (overrides train.stage2_epochs)");
  train->add_option("--lr", o.lr, "learning rate (overrides train.lr)");
  train->add_option("--batch-size", o.batch_size, "tracks per batch (overrides train.batch_size)");

  auto add_encoding = [&](CLI::App* c) {
    c->add_option("--baseline", o.baseline, "airobject, 2d or 3d")->check(CLI::IsMember({"airobject", "2d", "3d"}));
    c->add_option("--seq-len", o.seq_len, "use only the first N frames of each half");
    c->add_flag("--unique-features", o.unique_features, "drop near-duplicate structural rows before pooling");
    c->add_option("--unique-selector", o.selector, "location or content")->check(CLI::IsMember({"location", "content"}));
    c->add_option("--threads", o.threads, "encoding worker threads");
  };

  auto* enc = app.add_subcommand("encode", "write query/reference descriptors for every track");
  enc->add_option("--features", o.features, "feature file")->required();
  enc->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  add_config(enc);
  add_out(enc);
  add_encoding(enc);

  auto* ev = app.add_subcommand("eval", "match within videos and report P/R/F1 and PR-AUC");
  ev->add_option("--descriptors", o.descriptors, "descriptor dump from `encode`");
  ev->add_option("--features", o.features, "feature file (with --checkpoint)");
  ev->add_option("--checkpoint", o.checkpoint, "trained checkpoint (with --features)");
  add_config(ev);
  add_out(ev);
  add_encoding(ev);
  ev->add_option("--rho", o.rho, "matching threshold");
  ev->add_flag("--best-match", o.best_match, "only each query's best reference may match");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the full composite loss");
  gc->add_option("--seed", o.seed, "sample seed");
  gc->add_flag("--corrupt-adjoint", o.corrupt, "debug: scale one adjoint so the check must fail");
  add_out(gc);

  auto* defaults = app.add_subcommand("defaults", "print the default config as JSON");

  auto* rerun = app.add_subcommand("rerun", "re-execute the command recorded in a manifest");
  rerun->add_option("--manifest", o.manifest, "manifest file")->required();
  add_out(rerun);
  rerun->add_flag("--verify", o.verify, "compare output checksums with the manifest's");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n' << "run 'airobject --help' for usage\n";
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  Manifest manifest(name, args);
  try {
    int code = 0;
    if (sub == synth) {
      cmd_synth(o, manifest, out);
    } else if (sub == tri) {
      cmd_triangulate(o, manifest, out);
    } else if (sub == train) {
      cmd_train(o, manifest, out);
    } else if (sub == enc) {
      cmd_encode(o, manifest, out);
    } else if (sub == ev) {
      cmd_eval(o, manifest, out);
    } else if (sub == gc) {
      code = cmd_gradcheck(o, manifest, out);
    } else if (sub == defaults) {
      out << to_json(RunConfig{}).dump(2) << '\n';
      return 0;
    } else if (sub == rerun) {
      return cmd_rerun(o, out, err);
    }
    manifest.write();
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    manifest.set_status(std::string("failed: ") + e.what());
    try {
      manifest.write();
    } catch (const Error&) {
    }
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace airobject
