#include "airobject/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

namespace airobject {

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("cosine_similarity: lengths differ");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > kNormEpsilon) || !(nb > kNormEpsilon)) throw NumericalError("cosine_similarity: zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

Scores precision_recall_f1(const Counts& c) {
  Scores s;
  s.precision = c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  s.recall = c.tp + c.fn == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

std::vector<PairSimilarity> similarity_table(const std::vector<LabeledDescriptor>& queries,
                                             const std::vector<LabeledDescriptor>& references) {
  std::vector<PairSimilarity> table;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t r = 0; r < references.size(); ++r) {
      if (queries[q].video_id != references[r].video_id) continue;
      table.push_back({queries[q].video_id, q, r, queries[q].object_id == references[r].object_id,
                       cosine_similarity(queries[q].vector, references[r].vector)});
    }
  }
  return table;
}

Counts count_matches(const std::vector<PairSimilarity>& table, double rho, bool best_match) {
  std::map<std::size_t, std::size_t> best;  // query -> table row of its best reference
  if (best_match) {
    for (std::size_t i = 0; i < table.size(); ++i) {
      auto [it, inserted] = best.emplace(table[i].query, i);
      if (!inserted && table[i].similarity > table[it->second].similarity) it->second = i;
    }
  }
  Counts c;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& p = table[i];
    bool predicted = p.similarity >= rho;
    if (best_match) predicted = predicted && best.at(p.query) == i;
    if (predicted) {
      ++(p.same_object ? c.tp : c.fp);
    } else {
      ++(p.same_object ? c.fn : c.tn);
    }
  }
  return c;
}

Counts pairwise_match(const std::vector<LabeledDescriptor>& queries, const std::vector<LabeledDescriptor>& references,
                      double rho, bool best_match) {
  return count_matches(similarity_table(queries, references), rho, best_match);
}

std::vector<double> default_grid() {
  std::vector<double> grid(1001);
  for (int i = 0; i <= 1000; ++i) grid[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / 1000.0;
  return grid;
}

std::vector<CurvePoint> pr_curve(const std::vector<PairSimilarity>& table, const std::vector<double>& grid,
                                 bool best_match) {
  std::vector<CurvePoint> curve;
  curve.reserve(grid.size());
  for (double rho : grid) {
    CurvePoint p;
    p.threshold = rho;
    p.counts = count_matches(table, rho, best_match);
    p.scores = precision_recall_f1(p.counts);
    curve.push_back(p);
  }
  return curve;
}

double auc(std::vector<std::pair<double, double>> pts) {
  if (pts.size() < 2) throw DataError("auc: need at least two curve points");
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& p : pts) {
    if (!merged.empty() && merged.back().first == p.first) {
      merged.back().second = std::max(merged.back().second, p.second);
    } else {
      merged.push_back(p);
    }
  }
  // Extend to recall 0 with the precision of the lowest-recall point.
  double area = merged.front().first * merged.front().second;
  for (std::size_t i = 1; i < merged.size(); ++i) {
    area += (merged[i].first - merged[i - 1].first) * 0.5 * (merged[i].second + merged[i - 1].second);
  }
  return area;
}

double auc(const std::vector<CurvePoint>& curve) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(curve.size());
  for (const auto& p : curve) pts.emplace_back(p.scores.recall, p.scores.precision);
  return auc(std::move(pts));
}

void validate(const EvalConfig& c) {
  if (!(c.rho >= -1.0 && c.rho <= 1.0)) throw ConfigError("eval: rho must be in [-1, 1]");
  if (c.grid.size() < 2) throw ConfigError("eval: grid needs at least two thresholds");
  for (std::size_t i = 1; i < c.grid.size(); ++i)
    if (!(c.grid[i] > c.grid[i - 1])) throw ConfigError("eval: grid must be strictly increasing");
  if (c.seq_len && *c.seq_len < 1) throw ConfigError("eval: seq_len must be >= 1");
  if (!(c.unique_threshold > 0.0 && c.unique_threshold <= 1.0)) {
    throw ConfigError("eval: unique-feature threshold must be in (0, 1]");
  }
  if (c.threads < 1) throw ConfigError("eval: threads must be >= 1");
}

namespace {

Vector encode_half(const ObjectTrack& half, const EncoderParams& encoder, const TemporalParams* temporal,
                   const EvalConfig& cfg) {
  std::size_t frames = half.observations.size();
  if (cfg.seq_len) frames = std::min(frames, static_cast<std::size_t>(*cfg.seq_len));
  if (cfg.baseline == Baseline::SingleFrame) frames = 1;
  std::vector<FrameEncoding> encodings;
  for (std::size_t f = 0; f < frames; ++f) {
    encodings.push_back(
        encode_frame(build_frame_graph(half.observations[f], encoder.config, {half.video_id, half.object_id}), encoder));
  }
  switch (cfg.baseline) {
    case Baseline::SingleFrame:
      return single_frame_descriptor(encodings[0], encoder);
    case Baseline::Average: {
      std::vector<Vector> descs;
      for (const auto& e : encodings) descs.push_back(single_frame_descriptor(e, encoder));
      return average_descriptor_baseline(descs);
    }
    case Baseline::AirObject:
      break;
  }
  if (!temporal) throw UsageError("the airobject baseline needs temporal parameters");
  StackedFeatures stacked = stack_sequence(encodings);
  if (cfg.unique_features) stacked = select_unique_features(stacked, encodings, cfg.unique_threshold, cfg.unique_selector);
  return temporal_descriptor(stacked, *temporal);
}

}  // namespace

std::vector<LabeledDescriptor> encode_tracks(const TrackSet& tracks, const EncoderParams& encoder,
                                             const TemporalParams* temporal, const EvalConfig& config) {
  validate(config);
  const std::size_t n = tracks.tracks.size();
  std::vector<LabeledDescriptor> out(2 * n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t t) {
    try {
      const auto& track = tracks.tracks[t];
      auto [query, reference] = split_track(track, 0.5);
      out[2 * t] = {track.video_id, track.object_id, "query", encode_half(query, encoder, temporal, config)};
      out[2 * t + 1] = {track.video_id, track.object_id, "reference", encode_half(reference, encoder, temporal, config)};
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t t = 0; t < n; ++t) work(t);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < n; t += workers) work(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

EvalReport evaluate_descriptors(const std::vector<LabeledDescriptor>& descriptors, const EvalConfig& config) {
  validate(config);
  std::vector<LabeledDescriptor> queries, references;
  for (const auto& d : descriptors) {
    if (d.half == "query") {
      queries.push_back(d);
    } else if (d.half == "reference") {
      references.push_back(d);
    } else {
      throw DataError("descriptor half must be query or reference, got '" + d.half + "'");
    }
  }
  if (queries.empty() || references.empty()) throw DataError("evaluation needs query and reference descriptors");

  EvalReport report;
  report.config = config;
  const auto table = similarity_table(queries, references);
  report.counts = count_matches(table, config.rho, config.best_match);
  report.scores = precision_recall_f1(report.counts);
  report.curve = pr_curve(table, config.grid, config.best_match);
  report.auc = auc(report.curve);
  report.positive_pairs = report.counts.tp + report.counts.fn;

  std::map<std::string, std::vector<PairSimilarity>> by_video;
  for (const auto& p : table) by_video[p.video_id].push_back(p);
  for (const auto& [video, rows] : by_video) {
    VideoBreakdown v;
    v.video_id = video;
    v.counts = count_matches(rows, config.rho, config.best_match);
    v.scores = precision_recall_f1(v.counts);
    v.auc = auc(pr_curve(rows, config.grid, config.best_match));
    report.videos.push_back(v);
  }
  return report;
}

EvalReport run_benchmark(const TrackSet& tracks, const EncoderParams& encoder, const TemporalParams* temporal,
                         const EvalConfig& config) {
  for (const auto& t : tracks.tracks) {
    if (t.observations.size() < 2) {
      throw DataError("run_benchmark: track (" + t.video_id + ", " + t.object_id + ") has fewer than 2 frames");
    }
  }
  return evaluate_descriptors(encode_tracks(tracks, encoder, temporal, config), config);
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

void save_descriptors(const std::vector<LabeledDescriptor>& descriptors, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write descriptor file " + path.string());
  std::string line;
  for (const auto& d : descriptors) {
    line = "{\"video_id\": " + quoted(d.video_id) + ", \"object_id\": " + quoted(d.object_id) +
           ", \"half\": " + quoted(d.half) + ", \"vector\": [";
    for (Eigen::Index i = 0; i < d.vector.size(); ++i) {
      if (i) line += ", ";
      append_double(line, d.vector[i]);
    }
    line += "]}\n";
    out << line;
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<LabeledDescriptor> load_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open descriptor file " + path.string());
  std::vector<LabeledDescriptor> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      LabeledDescriptor d;
      d.video_id = j.at("video_id").get<std::string>();
      d.object_id = j.at("object_id").get<std::string>();
      d.half = j.at("half").get<std::string>();
      const auto& v = j.at("vector");
      d.vector.resize(static_cast<Eigen::Index>(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) d.vector[static_cast<Eigen::Index>(i)] = v[i].get<double>();
      if (!out.empty() && out.front().vector.size() != d.vector.size()) {
        throw DimensionError(where + "vector length differs from the first record");
      }
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + e.what());
    }
  }
  if (out.empty()) throw DataError("descriptor file " + path.string() + " is empty");
  return out;
}

std::string baseline_name(Baseline b) {
  switch (b) {
    case Baseline::SingleFrame:
      return "2d";
    case Baseline::Average:
      return "3d";
    case Baseline::AirObject:
      break;
  }
  return "airobject";
}

Baseline parse_baseline(const std::string& name) {
  if (name == "airobject") return Baseline::AirObject;
  if (name == "2d") return Baseline::SingleFrame;
  if (name == "3d") return Baseline::Average;
  throw UsageError("unknown baseline '" + name + "' (expected airobject, 2d or 3d)");
}

namespace {

nlohmann::ordered_json counts_json(const Counts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

nlohmann::ordered_json scores_json(const Scores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  const auto& c = r.config;
  j["config"] = {{"rho", c.rho},
                 {"baseline", baseline_name(c.baseline)},
                 {"s_l", c.seq_len ? nlohmann::ordered_json(*c.seq_len) : nlohmann::ordered_json(nullptr)},
                 {"unique_features", c.unique_features},
                 {"unique_selector", c.unique_selector == UniqueSelector::Location ? "location" : "content"},
                 {"unique_threshold", c.unique_threshold},
                 {"best_match", c.best_match},
                 {"grid_points", c.grid.size()},
                 {"grid_min", c.grid.front()},
                 {"grid_max", c.grid.back()}};
  j["at_rho"] = {{"counts", counts_json(r.counts)}, {"scores", scores_json(r.scores)}};
  j["auc"] = r.auc;
  j["positive_pairs"] = r.positive_pairs;
  auto videos = nlohmann::ordered_json::array();
  for (const auto& v : r.videos) {
    videos.push_back({{"video_id", v.video_id},
                      {"counts", counts_json(v.counts)},
                      {"scores", scores_json(v.scores)},
                      {"auc", v.auc}});
  }
  j["videos"] = videos;
  auto curve = nlohmann::ordered_json::array();
  for (const auto& p : r.curve) {
    curve.push_back({{"threshold", p.threshold}, {"counts", counts_json(p.counts)}, {"scores", scores_json(p.scores)}});
  }
  j["curve"] = curve;
  return j.dump(2) + "\n";
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "threshold,precision,recall,f1\n";
  for (const auto& p : curve) {
    append_double(out, p.threshold);
    out += ',';
    append_double(out, p.scores.precision);
    out += ',';
    append_double(out, p.scores.recall);
    out += ',';
    append_double(out, p.scores.f1);
    out += '\n';
  }
  return out;
}

std::string summary_line(const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "P/R/F1/AUC @ %.3f: %.4f / %.4f / %.4f / %.4f", r.config.rho, r.scores.precision,
                r.scores.recall, r.scores.f1, r.auc);
  return buf;
}

}  // namespace airobject
