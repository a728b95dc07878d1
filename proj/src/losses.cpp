#include "airobject/losses.hpp"

#include <set>

namespace airobject {

Var sparse_location_loss(const Var& x_loc) {
  if (x_loc.rows() < 1) throw DataError("sparse_location_loss: no nodes");
  return diff::scale(diff::abs_sum(diff::l2_normalize_rows(x_loc)), 1.0 / static_cast<Real>(x_loc.rows()));
}

Var dense_feature_loss(const Var& x_loc, double delta) {
  Var density = diff::abs_sum(diff::l2_normalize_rows(diff::reduce_sum(x_loc)));
  return diff::relu(diff::add_scalar(diff::scale(density, -1.0), delta));
}

PairBatch sample_pairs(const std::vector<std::string>& identities) {
  if (std::set<std::string>(identities.begin(), identities.end()).size() < 2) {
    throw DataError("sample_pairs: batch needs at least two identities");
  }
  PairBatch batch;
  const auto n = static_cast<Eigen::Index>(identities.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      auto& dst = identities[static_cast<std::size_t>(i)] == identities[static_cast<std::size_t>(j)]
                      ? batch.positives
                      : batch.negatives;
      dst.emplace_back(i, j);
    }
  }
  return batch;
}

Var matching_loss(const Var& descriptors, const PairBatch& pairs, double lambda) {
  Tape& tape = descriptors.tape();
  Var sim = diff::matmul_nt(descriptors, descriptors);
  Var loss = tape.constant(Matrix::Zero(1, 1));
  if (!pairs.positives.empty()) {
    Var pos = diff::gather(sim, pairs.positives);
    loss = loss + diff::add_scalar(diff::scale(diff::sum(pos), -1.0), static_cast<Real>(pairs.positives.size()));
  }
  if (!pairs.negatives.empty()) {
    Var neg = diff::gather(sim, pairs.negatives);
    loss = loss + diff::sum(diff::relu(diff::add_scalar(neg, -lambda)));
  }
  return loss;
}

double sparse_location_loss(const Matrix& x_loc) {
  Tape tape(false);
  return sparse_location_loss(tape.constant(x_loc)).scalar();
}

double dense_feature_loss(const Matrix& x_loc, double delta) {
  Tape tape(false);
  return dense_feature_loss(tape.constant(x_loc), delta).scalar();
}

double matching_loss(const Matrix& descriptors, const PairBatch& pairs, double lambda) {
  Tape tape(false);
  return matching_loss(tape.constant(descriptors), pairs, lambda).scalar();
}

}  // namespace airobject
