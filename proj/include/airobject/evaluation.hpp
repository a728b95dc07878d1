#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "airobject/features.hpp"
#include "airobject/graph_encoder.hpp"
#include "airobject/temporal_encoder.hpp"

namespace airobject {

/// a.b / (|a||b|) clamped to [-1, 1]. Throws NumericalError on a zero vector.
double cosine_similarity(const Vector& a, const Vector& b);

struct LabeledDescriptor {
  std::string video_id;
  std::string object_id;
  std::string half;  // "query" or "reference"
  Vector vector;
};

struct Counts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const Counts&) const = default;
};

struct Scores {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// P = TP/(TP+FP), 1 when TP+FP = 0; R = TP/(TP+FN), 1 when TP+FN = 0;
/// F1 = 2PR/(P+R), 0 when P+R = 0.
Scores precision_recall_f1(const Counts& c);

/// Every within-video (query, reference) pair with its similarity.
struct PairSimilarity {
  std::string video_id;
  std::size_t query = 0, reference = 0;  // indices into the input lists
  bool same_object = false;
  double similarity = 0.0;
};

std::vector<PairSimilarity> similarity_table(const std::vector<LabeledDescriptor>& queries,
                                             const std::vector<LabeledDescriptor>& references);

/// Pairwise thresholding: a pair is a predicted match iff C >= rho. With
/// best_match, only each query's most similar reference in its video (lowest
/// index on ties) may be predicted.
Counts count_matches(const std::vector<PairSimilarity>& table, double rho, bool best_match = false);

Counts pairwise_match(const std::vector<LabeledDescriptor>& queries, const std::vector<LabeledDescriptor>& references,
                      double rho, bool best_match = false);

struct CurvePoint {
  double threshold = 0.0;
  Counts counts;
  Scores scores;
};

/// 1001 evenly spaced thresholds in [-1, 1].
std::vector<double> default_grid();

/// One point per threshold, in grid order; the table is computed once.
std::vector<CurvePoint> pr_curve(const std::vector<PairSimilarity>& table, const std::vector<double>& grid,
                                 bool best_match = false);

/// Trapezoidal area under (recall, precision) points: sorted by recall,
/// duplicate recalls collapsed to their max precision, extended to recall 0
/// with the first point's precision. Throws DataError for fewer than two
/// points.
double auc(std::vector<std::pair<double, double>> recall_precision);
double auc(const std::vector<CurvePoint>& curve);

enum class Baseline { AirObject, SingleFrame, Average };

struct EvalConfig {
  double rho = 0.5;
  std::vector<double> grid = default_grid();
  std::optional<int> seq_len;  // s_l cap: first min(s_l, half length) frames of each half
  bool unique_features = false;
  UniqueSelector unique_selector = UniqueSelector::Location;
  double unique_threshold = 0.9;
  Baseline baseline = Baseline::AirObject;
  bool best_match = false;
  int threads = 1;
};

void validate(const EvalConfig& config);

struct VideoBreakdown {
  std::string video_id;
  Counts counts;
  Scores scores;
  double auc = 0.0;
};

struct EvalReport {
  EvalConfig config;
  Counts counts;  // at rho, pooled over videos
  Scores scores;
  std::vector<CurvePoint> curve;
  double auc = 0.0;
  long positive_pairs = 0;
  std::vector<VideoBreakdown> videos;
};

/// Query and reference descriptors for every track under the configured
/// baseline, s_l cap and unique-feature options. `temporal` may be null
/// for the 2D and 3D baselines.
std::vector<LabeledDescriptor> encode_tracks(const TrackSet& tracks, const EncoderParams& encoder,
                                             const TemporalParams* temporal, const EvalConfig& config);

/// Evaluates labeled descriptors (alternating or grouped halves).
EvalReport evaluate_descriptors(const std::vector<LabeledDescriptor>& descriptors, const EvalConfig& config);

/// Half split, encode, evaluate within each video.
EvalReport run_benchmark(const TrackSet& tracks, const EncoderParams& encoder, const TemporalParams* temporal,
                         const EvalConfig& config);

/// Descriptor dump: one JSON record per line,
///   {"video_id": str, "object_id": str, "half": "query"|"reference", "vector": [...]}
/// with 17 significant digits so a reload is exact.
void save_descriptors(const std::vector<LabeledDescriptor>& descriptors, const std::filesystem::path& path);
std::vector<LabeledDescriptor> load_descriptors(const std::filesystem::path& path);

std::string baseline_name(Baseline b);
Baseline parse_baseline(const std::string& name);

/// Deterministic JSON text of the report (no timestamps).
std::string report_json(const EvalReport& report);
/// threshold,precision,recall,f1
std::string curve_csv(const std::vector<CurvePoint>& curve);
/// "P/R/F1/AUC @ rho: ..."
std::string summary_line(const EvalReport& report);

}  // namespace airobject
