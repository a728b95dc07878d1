#pragma once

#include <string>
#include <utility>
#include <vector>

#include "airobject/graph_encoder.hpp"

namespace airobject {

/// mean_i |l2n(x_loc_i)|_1. Throws NumericalError on a zero row.
Var sparse_location_loss(const Var& x_loc);

/// max(0, delta - |l2n(sum_i x_loc_i)|_1). Throws NumericalError if the sum is zero.
Var dense_feature_loss(const Var& x_loc, double delta);

/// Index pairs into a list of descriptors.
struct PairBatch {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> positives;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> negatives;
};

/// Every unordered pair (i < j): positive when identities match, negative
/// otherwise. Throws DataError when fewer than two identities are present.
PairBatch sample_pairs(const std::vector<std::string>& identities);

/// sum_pos (1 - C) + sum_neg max(0, C - lambda) over unit-norm descriptor
/// rows, where C is the dot product.
Var matching_loss(const Var& descriptors, const PairBatch& pairs, double lambda);

/// Plain evaluations of the same formulas.
double sparse_location_loss(const Matrix& x_loc);
double dense_feature_loss(const Matrix& x_loc, double delta);
double matching_loss(const Matrix& descriptors, const PairBatch& pairs, double lambda);

}  // namespace airobject
