// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 iff all
// pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "airobject/cli.hpp"
#include "airobject/evaluation.hpp"
#include "airobject/geom/delaunay.hpp"
#include "airobject/losses.hpp"
#include "airobject/training.hpp"
#include "geometry_oracle.hpp"
#include "model_fixtures.hpp"

using namespace airobject;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// ---------------------------------------------------------------------------

void ac1_gradient() {
  const auto t0 = Clock::now();
  const CompositeCheckResult r = check_composite_gradient(1);
  const double secs = seconds_since(t0);
  report("AC1", r.check.max_relative_error < 1e-4 && secs < 60.0,
         format("composite gradcheck: max rel err %.3e over %d tensors (worst %s), eps 1e-4, %.2fs (< 60s)",
                r.check.max_relative_error, r.parameter_tensors, r.check.worst_parameter.c_str(), secs));
}

void ac2_delaunay() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  int sets = 0, rejected = 0, violations = 0, missing = 0, triangles = 0;
  while (sets < 200) {
    const int n = 3 + static_cast<int>(rng.index(38));  // 3..40
    PointMatrix p(n, 2);
    for (int i = 0; i < n; ++i) p.row(i) << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
    if (oracle::min_cocircular_gap(p) < 1e-6) {
      ++rejected;
      continue;
    }
    ++sets;
    const auto tri = geom::delaunay(p);
    if (!tri) {
      ++missing;
      continue;
    }
    triangles += static_cast<int>(tri->triangles.size());
    violations += oracle::empty_circle_violations(p, tri->triangles, 1e-9);
  }
  const double secs = seconds_since(t0);
  report("AC2", violations == 0 && missing == 0 && secs < 30.0,
         format("Delaunay: 200 sets (n <= 40, %d cocircular rejected), %d triangles, %d empty-circle violations "
                "(margin 1e-9), %.2fs (< 30s)",
                rejected, triangles, violations, secs));
}

void ac3_metrics() {
  struct Row {
    double p, r, f1;
  };
  const Row rows[] = {
      {68.93, 80.93, 74.45}, {69.20, 81.78, 74.97}, {29.45, 68.32, 41.15}, {47.92, 77.26, 59.15},
      {77.52, 52.41, 62.54}, {85.38, 71.54, 77.85}, {49.41, 29.45, 36.90}, {80.17, 41.62, 54.80},
      {71.59, 66.38, 68.89}, {68.18, 80.87, 73.98}, {39.80, 44.87, 42.18}, {68.41, 55.20, 61.10},
      {79.47, 73.49, 76.36}, {81.75, 82.22, 81.99}, {38.58, 55.40, 45.49}, {67.73, 66.94, 67.33},
      {65.14, 86.48, 74.31}, {69.59, 77.02, 73.11}, {25.58, 80.29, 38.80}, {43.87, 86.42, 58.20},
      {76.73, 86.48, 81.31}, {95.63, 73.11, 82.86}, {70.19, 42.09, 52.62}, {92.67, 66.85, 77.67},
      {85.09, 82.36, 83.70}, {94.04, 83.62, 88.52}, {69.86, 42.47, 52.82}, {93.07, 74.81, 82.95},
  };
  double worst = 0.0;
  int bad = 0;
  for (const Row& row : rows) {
    // Counts whose precision and recall are exactly the table's values.
    const long scale = 1000000;
    Counts c;
    c.tp = std::lround(row.p * row.r * scale);
    c.fp = std::lround(row.r * (100.0 - row.p) * scale);
    c.fn = std::lround(row.p * (100.0 - row.r) * scale);
    const Scores s = precision_recall_f1(c);
    const double err = std::abs(100.0 * s.f1 - row.f1);
    if (std::abs(100.0 * s.precision - row.p) > 1e-6 || std::abs(100.0 * s.recall - row.r) > 1e-6 || err > 0.01) ++bad;
    worst = std::max(worst, err);
  }
  report("AC3", bad == 0,
         format("F1 from (P, R): %zu table rows, worst |F1 - table| %.4f pp (tol 0.01), %d out of tolerance",
                std::size(rows), worst, bad));
}

void ac4_invariance() {
  const auto t0 = Clock::now();
  Rng rng(4);
  const ModelConfig model;  // full default widths
  double perm = 0, order = 0, norm = 0, conv = 0;
  int trials = 0;
  // A few full-width parameter draws shared across the randomized inputs;
  // initializing 2048-wide layers dominates the cost otherwise.
  std::vector<EncoderParams> encoders;
  std::vector<TemporalParams> temporals;
  for (int k = 0; k < 5; ++k) {
    encoders.push_back(EncoderParams::init(model, rng));
    temporals.push_back(testutil::random_temporal(rng, model.D_o));
  }
  for (int k = 0; k < 250; ++k) {
    const EncoderParams& enc = encoders[static_cast<std::size_t>(k % 5)];
    // node-permutation equivariance of encode_frame
    {
      const int n = 3 + static_cast<int>(rng.index(20));
      FrameObservation obs;
      obs.positions.resize(n, 2);
      for (int i = 0; i < n; ++i) obs.positions.row(i) << rng.uniform(0, 200), rng.uniform(0, 120);
      obs.descriptors = testutil::random_matrix(rng, n, model.D_p);
      obs.bbox << -1, -1, 201, 121;
      const FrameGraph g = build_frame_graph(obs, model);
      const auto p = testutil::random_permutation(rng, n);
      const FrameEncoding a = encode_frame(g, enc);
      const FrameEncoding b = encode_frame(testutil::permute_graph(g, p), enc);
      perm = std::max({perm, (testutil::permute_rows(a.x_loc, p) - b.x_loc).cwiseAbs().maxCoeff(),
                       (testutil::permute_rows(a.x_content, p) - b.x_content).cwiseAbs().maxCoeff(),
                       (testutil::permute_rows(a.x_struct, p) - b.x_struct).cwiseAbs().maxCoeff()});
      ++trials;
    }
    // frame-order invariance of the AirObject descriptor, and unit norm
    {
      const TemporalParams& tmp = temporals[static_cast<std::size_t>(k % 5)];
      std::vector<FrameGraph> frames;
      const int f = 2 + static_cast<int>(rng.index(4));
      for (int i = 0; i < f; ++i) frames.push_back(testutil::random_graph(rng, 3 + static_cast<int>(rng.index(12)), model.D_p));
      const Vector a = airobject_descriptor(frames, enc, tmp);
      std::vector<FrameGraph> shuffled = frames;
      rng.shuffle(shuffled);
      const Vector b = airobject_descriptor(shuffled, enc, tmp);
      order = std::max(order, (a - b).cwiseAbs().maxCoeff());
      norm = std::max(norm, std::abs(a.norm() - 1.0));
      const Vector s = single_frame_descriptor(encode_frame(frames[0], enc), enc);
      norm = std::max(norm, std::abs(s.norm() - 1.0));
      trials += 2;
    }
    // temporal_conv against a literal length-1 convolution
    {
      const int d = 1 + static_cast<int>(rng.index(64));
      const int rows = 1 + static_cast<int>(rng.index(30));
      TemporalParams tmp = testutil::random_temporal(rng, d);
      const Matrix x = testutil::random_matrix(rng, rows, d);
      const Matrix y = temporal_conv(x, tmp);
      for (int t = 0; t < rows; ++t) {
        for (int o = 0; o < d; ++o) {
          double acc = tmp.bias.value(0, o);
          for (int c = 0; c < d; ++c) acc += tmp.kernel.value(o, c) * x(t, c);
          conv = std::max(conv, std::abs(acc - y(t, o)));
        }
      }
      ++trials;
    }
  }
  const double secs = seconds_since(t0);
  report("AC4", perm <= 1e-9 && order <= 1e-9 && norm <= 1e-6 && conv <= 1e-12 && trials == 1000 && secs < 120.0,
         format("invariance, %d trials: permutation %.2e (<= 1e-9), frame order %.2e (<= 1e-9), unit norm %.2e "
                "(<= 1e-6), conv vs affine %.2e (<= 1e-12), %.1fs (< 120s)",
                trials, perm, order, norm, conv, secs));
}

// Trained on a generator-default training set; evaluated on a held-out set.
struct Benchmark {
  ModelConfig model;
  EncoderParams encoder;
  TemporalParams temporal;
  TrackSet test;
};

Benchmark ac5_benchmark() {
  SynthConfig synth;  // generator defaults
  synth.seed = 7;
  const TrackSet train_set = generate_synthetic(synth);
  synth.seed = 8;
  const TrackSet test_set = generate_synthetic(synth);

  ModelConfig model;
  model.D_o = 512;
  Rng rng(1);
  Benchmark b{model, EncoderParams::init(model, rng), TemporalParams::init(model.D_o), test_set};
  TrainConfig train;  // batch 16, lr 1e-4, 10 epochs per stage
  const auto t0 = Clock::now();
  train_stage1(train_set, b.encoder, train);
  train_stage2(train_set, b.encoder, b.temporal, train);
  const double secs = seconds_since(t0);

  const EvalConfig base;
  EvalConfig two_d = base;
  two_d.baseline = Baseline::SingleFrame;
  EvalConfig single = base;
  single.seq_len = 1;
  const double air = run_benchmark(test_set, b.encoder, &b.temporal, base).auc;
  const double flat = run_benchmark(test_set, b.encoder, nullptr, two_d).auc;
  const double sl1 = run_benchmark(test_set, b.encoder, &b.temporal, single).auc;
  report("AC5", air >= flat && air >= sl1 && air >= 0.85 && secs <= 900.0,
         format("synthetic benchmark (%zu train / %zu held-out tracks, D_o %d): AirObject AUC %.4f >= 2D %.4f, "
                ">= s_l=1 %.4f, >= 0.85; training %.1fs (<= 900s)",
                train_set.tracks.size(), test_set.tracks.size(), model.D_o, air, flat, sl1, secs));
  return b;
}

void ac6_loss_bounds() {
  Rng rng(6);
  int bad = 0;
  double ls_lo = INFINITY, ls_hi_slack = INFINITY, ld_lo = INFINITY, ld_hi_slack = INFINITY, lm_lo = INFINITY;
  const int trials = 10000;
  for (int k = 0; k < trials; ++k) {
    const int d = k % 100 == 0 ? 2048 : 1 + static_cast<int>(rng.index(128));
    const int n = 1 + static_cast<int>(rng.index(8));
    // ReLU-like rows: non-negative with random exact zeros, never all zero.
    Matrix x = testutil::random_matrix(rng, n, d).cwiseAbs();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j)
        if (rng.bernoulli(0.5)) x(i, j) = 0.0;
      x(i, static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(d)))) = rng.uniform(0.1, 2.0);
    }
    const double root = std::sqrt(static_cast<double>(d));
    for (int i = 0; i < n; ++i) {
      const double ls = sparse_location_loss(x.row(i));
      ls_lo = std::min(ls_lo, ls - 1.0);
      ls_hi_slack = std::min(ls_hi_slack, root - ls);
      if (ls < 1.0 - 1e-12 || ls > root + 1e-12) ++bad;
    }
    const double delta = rng.uniform(0.0, 50.0);
    const double ld = dense_feature_loss(x, delta);
    ld_lo = std::min(ld_lo, ld);
    ld_hi_slack = std::min(ld_hi_slack, delta - ld);
    if (ld < 0.0 || ld > delta) ++bad;

    std::vector<std::string> ids;
    const int m = 2 + static_cast<int>(rng.index(10));
    for (int i = 0; i < m; ++i) ids.push_back(std::to_string(rng.index(3)));
    if (std::set<std::string>(ids.begin(), ids.end()).size() < 2) ids[0] = ids[1] == "0" ? "1" : "0";
    Matrix desc = testutil::random_matrix(rng, m, std::min(d, 32));
    for (int i = 0; i < m; ++i) desc.row(i).normalize();
    const double lm = matching_loss(desc, sample_pairs(ids), 0.2);
    lm_lo = std::min(lm_lo, lm);
    if (lm < 0.0) ++bad;
  }
  // Hinge boundary: a negative pair at exactly C = lambda contributes 0.
  Matrix d2(2, 2);
  d2 << 1.0, 0.0, 0.2, std::sqrt(0.96);
  PairBatch neg;
  neg.negatives = {{0, 1}};
  const double boundary = matching_loss(d2, neg, 0.2);
  report("AC6", bad == 0 && boundary == 0.0,
         format("loss bounds over %d inputs: min(L_s - 1) %.1e, min(sqrt(D_o) - L_s) %.1e, min L_d %.1e, "
                "min(delta - L_d) %.1e, min L_m %.1e, %d violations; hinge at C = lambda gives %g",
                trials, ls_lo, ls_hi_slack, ld_lo, ld_hi_slack, lm_lo, bad, boundary));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void ac7_determinism() {
  const fs::path root = fs::temp_directory_path() / "airobject_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path config = root / "config.json";
  std::ofstream(config) << R"({"synth": {"num_objects": 12, "videos": 4, "objects_per_video": 3, "seed": 3},
                               "model": {"D_o": 512}, "train": {"epochs": 2, "seed": 5}})";
  std::ostringstream sink;
  int codes = 0;
  auto pipeline = [&](const std::string& name) {
    const std::string dir = (root / name).string();
    const std::string cfg = config.string();
    codes += run_cli({"synth", "--config", cfg, "--out", dir}, sink, sink);
    codes += run_cli({"train", "--features", dir + "/features.jsonl", "--config", cfg, "--out", dir}, sink, sink);
    codes += run_cli({"encode", "--features", dir + "/features.jsonl", "--checkpoint", dir + "/checkpoint.ckpt",
                      "--threads", "1", "--out", dir},
                     sink, sink);
    codes += run_cli({"eval", "--descriptors", dir + "/descriptors.jsonl", "--config", cfg, "--out", dir}, sink, sink);
  };
  pipeline("run1");
  pipeline("run2");
  int identical = 0;
  const char* files[] = {"features.jsonl", "checkpoint.ckpt", "descriptors.jsonl", "report.json", "curve.csv"};
  for (const char* f : files) {
    const std::string a = slurp(root / "run1" / f);
    if (!a.empty() && a == slurp(root / "run2" / f)) ++identical;
  }
  fs::remove_all(root);
  report("AC7", codes == 0 && identical == static_cast<int>(std::size(files)),
         format("determinism: synth -> train -> encode -> eval twice, %d/%zu artifacts bitwise identical "
                "(features, checkpoint, descriptors, report, curve), summed exit codes %d",
                identical, std::size(files), codes));
}

// Removing one node should move only part of the set of strongly active
// coordinates of the summed location features.
void local_effect(const Benchmark& b) {
  int graphs = 0, removals = 0, over = 0;
  double worst = 0.0, total = 0.0;
  auto active = [](const Matrix& x_loc) {
    const Vector s = x_loc.colwise().sum().transpose();
    const double top = s.cwiseAbs().maxCoeff();
    std::set<Eigen::Index> idx;
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (std::abs(s(k)) > 0.01 * top) idx.insert(k);
    return idx;
  };
  for (const auto& track : b.test.tracks) {
    for (const auto& obs : track.observations) {
      if (obs.size() < 20 || graphs >= 20) continue;
      ++graphs;
      FrameObservation base = obs;
      base.positions = obs.positions.topRows(20).eval();
      base.descriptors = obs.descriptors.topRows(20).eval();
      const auto full = active(encode_frame(build_frame_graph(base, b.model), b.encoder).x_loc);
      for (int drop = 0; drop < 20; ++drop) {
        FrameObservation less = base;
        less.positions.resize(19, 2);
        less.descriptors.resize(19, base.descriptors.cols());
        for (int i = 0, r = 0; i < 20; ++i) {
          if (i == drop) continue;
          less.positions.row(r) = base.positions.row(i);
          less.descriptors.row(r) = base.descriptors.row(i);
          ++r;
        }
        const auto part = active(encode_frame(build_frame_graph(less, b.model), b.encoder).x_loc);
        std::vector<Eigen::Index> diff;
        std::set_symmetric_difference(full.begin(), full.end(), part.begin(), part.end(), std::back_inserter(diff));
        const double frac = static_cast<double>(diff.size()) / static_cast<double>(std::max<std::size_t>(1, full.size()));
        worst = std::max(worst, frac);
        total += frac;
        if (frac >= 0.5) ++over;
        ++removals;
      }
    }
  }
  report("LOCAL", removals > 0 && over == 0,
         format("local effect (trained AC5 model): %d graphs x 20 removals, active-set change mean %.3f, max %.3f "
                "(< 0.5), %d at or over",
                graphs, removals ? total / removals : 0.0, worst, over));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  ac1_gradient();
  ac2_delaunay();
  ac3_metrics();
  ac4_invariance();
  const Benchmark b = ac5_benchmark();
  ac6_loss_bounds();
  ac7_determinism();
  local_effect(b);
  std::printf("%s: %d failing, %.1fs total\n", failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED", failures,
              seconds_since(t0));
  return failures ? 1 : 0;
}
