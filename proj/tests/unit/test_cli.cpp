#include <gtest/gtest.h>

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "airobject/cli.hpp"
#include "airobject/config_io.hpp"
#include "airobject/diff/checkpoint.hpp"
#include "json.hpp"

extern char** environ;

using namespace airobject;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  for (std::string cell; std::getline(s, cell, ',');) out.push_back(cell);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("airobject_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = dir_ / "small.json";
    std::ofstream(config_) << R"({
      "synth": {"num_objects": 6, "videos": 2, "objects_per_video": 3, "frames_per_track": 4,
                "descriptor_dim": 16, "keypoints_min": 8, "keypoints_max": 12},
      "model": {"D_p": 16, "D_m": 4, "D_o": 32, "mlp_hidden": 8},
      "train": {"epochs": 2, "batch_size": 4, "lr": 0.001}
    })";
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  // synth + train (both stages) into `name`.
  void pipeline(const std::string& name) {
    ASSERT_EQ(run({"synth", "--config", config_.string(), "--out", p(name)}), 0) << err_.str();
    ASSERT_EQ(run({"train", "--features", p(name + "/features.jsonl"), "--config", config_.string(), "--out", p(name)}),
              0)
        << err_.str();
  }

  fs::path dir_, config_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST(Fnv1a, KnownVector) {
  const auto path = fs::temp_directory_path() / "airobject_fnv_a.txt";
  std::ofstream(path) << "a";
  EXPECT_EQ(fnv1a64_file(path), "af63dc4c8601ec8c");
  std::ofstream(path, std::ios::trunc).close();
  EXPECT_EQ(fnv1a64_file(path), "cbf29ce484222325");
  fs::remove(path);
}

TEST(ConfigIo, RoundTripAndStrictKeys) {
  RunConfig c;
  c.model.D_o = 64;
  c.train.lr = 0.125;
  c.eval.seq_len = 2;
  c.eval.baseline = Baseline::Average;
  RunConfig back;
  apply_json(nlohmann::json::parse(to_json(c).dump()), back);
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  EXPECT_THROW(apply_json(nlohmann::json::parse(R"({"model": {"D_x": 1}})"), back), ConfigError);
  EXPECT_THROW(apply_json(nlohmann::json::parse(R"({"train": {"epochs": "ten"}})"), back), ConfigError);
  EXPECT_THROW(apply_json(nlohmann::json::parse(R"({"optimizer": {}})"), back), ConfigError);
}

TEST_F(Cli, SynthIsByteIdenticalForSeed) {
  ASSERT_EQ(run({"synth", "--config", config_.string(), "--out", p("a")}), 0);
  ASSERT_EQ(run({"synth", "--config", config_.string(), "--out", p("b")}), 0);
  EXPECT_EQ(read_file(p("a/features.jsonl")), read_file(p("b/features.jsonl")));
  ASSERT_EQ(run({"synth", "--config", config_.string(), "--seed", "99", "--out", p("c")}), 0);
  EXPECT_NE(read_file(p("a/features.jsonl")), read_file(p("c/features.jsonl")));
  const auto manifest = nlohmann::json::parse(read_file(p("c/synth.manifest.json")));
  EXPECT_EQ(manifest["seed"], 99);
  EXPECT_EQ(manifest["config"]["seed"], 99);
  EXPECT_EQ(manifest["outputs"][0]["fnv1a64"], fnv1a64_file(p("c/features.jsonl")));
}

TEST_F(Cli, MissingConfigIsUsageError) {
  EXPECT_EQ(run({"synth", "--config", p("absent.json"), "--out", p("a")}), 1);
  EXPECT_NE(err_.str().find("config file not found"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"train"}), 1);
  EXPECT_EQ(run({"train", "--features", "x", "--stage", "3"}), 1);
  EXPECT_EQ(run({"eval", "--out", p("e")}), 1);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(Cli, BadConfigAndDataAreDataErrors) {
  std::ofstream(p("bad.json")) << R"({"model": {"D_q": 3}})";
  EXPECT_EQ(run({"synth", "--config", p("bad.json"), "--out", p("a")}), 2);
  std::ofstream(p("broken.jsonl")) << "{not json\n";
  EXPECT_EQ(run({"triangulate", "--features", p("broken.jsonl"), "--out", p("a")}), 2);
}

TEST_F(Cli, ConfigDirectoryLookup) {
  const fs::path confdir = dir_ / "conf";
  fs::create_directories(confdir);
  fs::copy_file(config_, confdir / "named.json");
  ::setenv("AIROBJECT_CONFIG_DIR", confdir.c_str(), 1);
  EXPECT_EQ(run({"synth", "--config", "named.json", "--out", p("a")}), 0) << err_.str();
  // No --config: the directory's airobject.json is the default.
  fs::copy_file(config_, confdir / "airobject.json");
  EXPECT_EQ(run({"synth", "--out", p("b")}), 0);
  ::unsetenv("AIROBJECT_CONFIG_DIR");
  EXPECT_EQ(read_file(p("a/features.jsonl")), read_file(p("b/features.jsonl")));
}

TEST_F(Cli, DefaultRunDirectoryNamesSeed) {
  const fs::path old = fs::current_path();
  fs::current_path(dir_);
  const int code = run({"synth", "--config", config_.string(), "--seed", "5"});
  fs::current_path(old);
  ASSERT_EQ(code, 0);
  std::vector<fs::path> runs;
  for (const auto& e : fs::directory_iterator(dir_ / "runs")) runs.push_back(e.path());
  ASSERT_EQ(runs.size(), 1u);
  const std::string name = runs[0].filename().string();
  EXPECT_EQ(name.substr(name.size() - 6), "_seed5");
  EXPECT_TRUE(fs::exists(runs[0] / "features.jsonl"));
  EXPECT_TRUE(fs::exists(runs[0] / "synth.manifest.json"));
}

TEST_F(Cli, TriangulateWritesEveryFrame) {
  ASSERT_EQ(run({"synth", "--config", config_.string(), "--out", p("a")}), 0);
  ASSERT_EQ(run({"triangulate", "--features", p("a/features.jsonl"), "--out", p("a")}), 0) << err_.str();
  const auto lines = lines_of(p("a/graphs.jsonl"));
  EXPECT_EQ(lines.size(), 6u * 4u);
  for (const auto& line : lines) {
    const auto rec = nlohmann::json::parse(line);
    const auto n = rec["positions"].size();
    EXPECT_GE(rec["edges"].size(), n - 1);
    for (const auto& e : rec["edges"]) EXPECT_LT(e[0].get<int>(), e[1].get<int>());
  }
}

TEST_F(Cli, StageOneCheckpointHoldsOnlyEncoder) {
  ASSERT_EQ(run({"synth", "--config", config_.string(), "--out", p("a")}), 0);
  ASSERT_EQ(run({"train", "--features", p("a/features.jsonl"), "--config", config_.string(), "--stage", "1", "--out",
                 p("a")}),
            0)
      << err_.str();
  const auto info = diff::read_checkpoint_info(p("a/checkpoint.ckpt"));
  EXPECT_EQ(info.sections,
            (std::vector<std::string>{"node_mlp", "gat1", "gat2", "loc_head", "content_head", "slp"}));
  EXPECT_FALSE(fs::exists(p("a/loss_stage2.csv")));

  // Stage 2 from that checkpoint adds the temporal section and leaves the
  // encoder tensors as they were.
  ASSERT_EQ(run({"train", "--features", p("a/features.jsonl"), "--config", config_.string(), "--stage", "2", "--init",
                 p("a/checkpoint.ckpt"), "--out", p("b")}),
            0)
      << err_.str();
  const auto info2 = diff::read_checkpoint_info(p("b/checkpoint.ckpt"));
  EXPECT_EQ(info2.sections.back(), "temporal");
  EXPECT_EQ(run({"train", "--features", p("a/features.jsonl"), "--stage", "2", "--out", p("c")}), 1);
}

TEST_F(Cli, TrainingIsDeterministic) {
  pipeline("a");
  pipeline("b");
  const auto header = lines_of(p("a/loss_stage1.csv")).front();
  EXPECT_EQ(header, "epoch,L_s,L_d,L_m,total,positive_cosine");
  EXPECT_EQ(lines_of(p("a/loss_stage1.csv")).size(), 3u);
  EXPECT_EQ(read_file(p("a/loss_stage1.csv")), read_file(p("b/loss_stage1.csv")));
  EXPECT_EQ(read_file(p("a/loss_stage2.csv")), read_file(p("b/loss_stage2.csv")));
  EXPECT_EQ(read_file(p("a/checkpoint.ckpt")), read_file(p("b/checkpoint.ckpt")));
}

TEST_F(Cli, RerunReproducesManifestOutputs) {
  pipeline("a");
  EXPECT_EQ(run({"rerun", "--manifest", p("a/train.manifest.json"), "--out", p("again"), "--verify"}), 0) << err_.str();
  EXPECT_NE(out_.str().find("rerun outputs match"), std::string::npos);
}

TEST_F(Cli, EncodeRowsAndDeterminism) {
  pipeline("a");
  ASSERT_EQ(run({"encode", "--features", p("a/features.jsonl"), "--checkpoint", p("a/checkpoint.ckpt"), "--out",
                 p("e1")}),
            0)
      << err_.str();
  ASSERT_EQ(run({"encode", "--features", p("a/features.jsonl"), "--checkpoint", p("a/checkpoint.ckpt"), "--threads",
                 "3", "--out", p("e2")}),
            0);
  const auto rows = load_descriptors(p("e1/descriptors.jsonl"));
  EXPECT_EQ(rows.size(), 2u * 6u);
  for (const auto& r : rows) EXPECT_NEAR(r.vector.norm(), 1.0, 1e-12);
  EXPECT_EQ(read_file(p("e1/descriptors.jsonl")), read_file(p("e2/descriptors.jsonl")));
}

TEST_F(Cli, EncodeWithoutTemporalSectionNeedsBaseline) {
  ASSERT_EQ(run({"synth", "--config", config_.string(), "--out", p("a")}), 0);
  ASSERT_EQ(run({"train", "--features", p("a/features.jsonl"), "--config", config_.string(), "--stage", "1", "--out",
                 p("a")}),
            0);
  EXPECT_EQ(run({"encode", "--features", p("a/features.jsonl"), "--checkpoint", p("a/checkpoint.ckpt"), "--out",
                 p("e")}),
            2);
  EXPECT_EQ(run({"encode", "--features", p("a/features.jsonl"), "--checkpoint", p("a/checkpoint.ckpt"), "--baseline",
                 "2d", "--out", p("e")}),
            0);
}

TEST_F(Cli, EvalBaselinesAndSeqLenHeader) {
  pipeline("a");
  for (const std::string b : {"airobject", "2d", "3d"}) {
    ASSERT_EQ(run({"eval", "--features", p("a/features.jsonl"), "--checkpoint", p("a/checkpoint.ckpt"), "--baseline", b,
                   "--out", p("ev_" + b)}),
              0)
        << err_.str();
    const auto report = nlohmann::json::parse(read_file(p("ev_" + b + "/report.json")));
    for (const char* key : {"config", "at_rho", "auc", "curve", "videos"}) EXPECT_TRUE(report.contains(key)) << key;
    EXPECT_EQ(report["config"]["baseline"], b);
    EXPECT_EQ(lines_of(p("ev_" + b + "/curve.csv")).size(), 1002u);
  }
  ASSERT_EQ(run({"eval", "--features", p("a/features.jsonl"), "--checkpoint", p("a/checkpoint.ckpt"), "--seq-len", "1",
                 "--out", p("sl1")}),
            0);
  EXPECT_EQ(nlohmann::json::parse(read_file(p("sl1/report.json")))["config"]["s_l"], 1);
  EXPECT_EQ(run({"eval", "--descriptors", p("a/none.jsonl"), "--seq-len", "1", "--out", p("x")}), 1);
}

TEST_F(Cli, PrintedAucMatchesCurveCsv) {
  pipeline("a");
  ASSERT_EQ(run({"encode", "--features", p("a/features.jsonl"), "--checkpoint", p("a/checkpoint.ckpt"), "--out",
                 p("a")}),
            0);
  ASSERT_EQ(run({"eval", "--descriptors", p("a/descriptors.jsonl"), "--out", p("a")}), 0) << err_.str();
  const std::string summary = out_.str();

  // Recompute from the CSV alone: sort by recall, keep the best precision per
  // recall, extend flat to recall 0, trapezoids.
  auto rows = lines_of(p("a/curve.csv"));
  ASSERT_EQ(rows.front(), "threshold,precision,recall,f1");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cells = split_csv(rows[i]);
    pts.emplace_back(std::stod(cells[2]), std::stod(cells[1]));
  }
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& q : pts) {
    if (!merged.empty() && merged.back().first == q.first) {
      merged.back().second = std::max(merged.back().second, q.second);
    } else {
      merged.push_back(q);
    }
  }
  double area = merged.front().first * merged.front().second;
  for (std::size_t i = 1; i < merged.size(); ++i)
    area += 0.5 * (merged[i].first - merged[i - 1].first) * (merged[i].second + merged[i - 1].second);

  const auto report = nlohmann::json::parse(read_file(p("a/report.json")));
  EXPECT_NEAR(report["auc"].get<double>(), area, 1e-12);
  char printed[16];
  std::snprintf(printed, sizeof printed, "%.4f", area);
  EXPECT_NE(summary.find(std::string("/ ") + printed + "\n"), std::string::npos) << summary;
}

TEST_F(Cli, GradcheckExitCodes) {
  EXPECT_EQ(run({"gradcheck", "--out", p("g")}), 0);
  EXPECT_NE(out_.str().find("PASS"), std::string::npos);
  EXPECT_EQ(run({"gradcheck", "--corrupt-adjoint", "--out", p("h")}), 3);
  EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
  const auto j = nlohmann::json::parse(read_file(p("h/gradcheck.json")));
  EXPECT_FALSE(j["pass"].get<bool>());
}

TEST_F(Cli, NumericalFailureKeepsLastGoodCheckpoint) {
  ASSERT_EQ(run({"synth", "--config", config_.string(), "--out", p("a")}), 0);
  EXPECT_EQ(run({"train", "--features", p("a/features.jsonl"), "--config", config_.string(), "--stage", "1", "--lr",
                 "1e200", "--out", p("a")}),
            3);
  // The epoch-0 checkpoint is intact and loadable.
  const auto info = diff::read_checkpoint_info(p("a/checkpoint.ckpt"));
  EXPECT_EQ(nlohmann::json::parse(info.metadata_json)["epoch"], 0);
  EXPECT_EQ(run({"encode", "--features", p("a/features.jsonl"), "--checkpoint", p("a/checkpoint.ckpt"), "--baseline",
                 "2d", "--out", p("e")}),
            0)
      << err_.str();
  const auto manifest = nlohmann::json::parse(read_file(p("a/train.manifest.json")));
  EXPECT_EQ(manifest["status"].get<std::string>().rfind("failed", 0), 0u);
}

TEST_F(Cli, KilledTrainingLeavesValidCheckpoint) {
  ASSERT_EQ(run({"synth", "--config", config_.string(), "--out", p("a")}), 0);
  const std::string bin = AIROBJECT_BINARY;
  std::vector<std::string> args{bin,      "train",  "--features", p("a/features.jsonl"), "--config", config_.string(),
                                "--stage", "1",      "--epochs",   "100000",              "--out",    p("a")};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  ASSERT_EQ(posix_spawn(&pid, bin.c_str(), &actions, nullptr, argv.data(), environ), 0);
  posix_spawn_file_actions_destroy(&actions);

  // Wait for a few finished epochs, then kill without warning.
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  while (std::chrono::steady_clock::now() < deadline) {
    if (fs::exists(p("a/loss_stage1.csv")) && lines_of(p("a/loss_stage1.csv")).size() >= 4) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFSIGNALED(status));

  const auto info = diff::read_checkpoint_info(p("a/checkpoint.ckpt"));
  const int epoch = nlohmann::json::parse(info.metadata_json)["epoch"];
  const auto csv_epochs = static_cast<int>(lines_of(p("a/loss_stage1.csv")).size()) - 1;
  EXPECT_GE(epoch, 3);
  EXPECT_TRUE(epoch == csv_epochs || epoch == csv_epochs - 1) << epoch << " vs " << csv_epochs;
  EXPECT_EQ(run({"encode", "--features", p("a/features.jsonl"), "--checkpoint", p("a/checkpoint.ckpt"), "--baseline",
                 "2d", "--out", p("e")}),
            0)
      << err_.str();
  // Training can resume from it.
  EXPECT_EQ(run({"train", "--features", p("a/features.jsonl"), "--config", config_.string(), "--stage", "1", "--init",
                 p("a/checkpoint.ckpt"), "--epochs", "1", "--out", p("resumed")}),
            0)
      << err_.str();
}
