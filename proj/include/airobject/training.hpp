#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "airobject/diff/gradcheck.hpp"
#include "airobject/features.hpp"
#include "airobject/graph_encoder.hpp"
#include "airobject/losses.hpp"
#include "airobject/temporal_encoder.hpp"

namespace airobject {

struct TrainConfig {
  int batch_size = 16;  // tracks per batch
  double lr = 1e-4;
  int s_l_max = 4;
  double delta = 10.0;
  double lambda_margin = 0.2;
  double w_s = 1.0;
  double w_d = 1.0;
  double w_m = 1.0;
  int epochs = 10;
  int stage2_epochs = 0;  // 0 means `epochs`
  std::uint64_t seed = 1;
};

void validate(const TrainConfig& config);

/// Means over the batches of one epoch. Stage 2 leaves L_s and L_d at 0.
struct EpochStats {
  int epoch = 0;  // 1-based
  double L_s = 0.0;
  double L_d = 0.0;
  double L_m = 0.0;
  double total = 0.0;
  double positive_cosine = 0.0;  // mean cosine over positive pairs
  int batches = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains `params` in place on single-frame descriptors. Each batch item is
/// one track contributing a random frame t and its nearest distinct frame
/// (t + 1, or t - 1 for the last frame); identity is object_id, so the two
/// frames form a positive pair and every cross-object pair a negative.
/// Loss = w_s mean L_s + w_d mean L_d + w_m L_m. `on_epoch` runs after
/// every epoch (checkpointing hook).
std::vector<EpochStats> train_stage1(const TrackSet& tracks, EncoderParams& params, const TrainConfig& config,
                                     const EpochCallback& on_epoch = {});

/// Trains `temporal` with the encoder frozen. Structural features are
/// computed once; each track contributes one contiguous subsequence of
/// length uniform in [1, min(s_l_max, half length)] from each half.
/// Optimizes L_m only.
std::vector<EpochStats> train_stage2(const TrackSet& tracks, const EncoderParams& encoder, TemporalParams& temporal,
                                     const TrainConfig& config, const EpochCallback& on_epoch = {});

struct CompositeCheckResult {
  diff::GradCheckResult check;
  std::uint64_t seed_used = 0;  // seed of the accepted (kink-free) sample
  int parameter_tensors = 0;
};

/// Finite-difference check of the full composite loss (L_s + L_d + L_m on
/// single-frame descriptors + L_m on temporal descriptors) through every
/// encoder and temporal parameter, on two toy objects with two 5-node
/// frames each. Samples whose non-smooth ops sit within `min_kink_margin`
/// of a kink are re-drawn with the next seed.
CompositeCheckResult check_composite_gradient(std::uint64_t seed, bool corrupt_adjoints = false, double eps = 1e-4,
                                              double min_kink_margin = 1e-3);

}  // namespace airobject
