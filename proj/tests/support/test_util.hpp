#pragma once

#include <cstdint>
#include <vector>

#include "airobject/common.hpp"
#include "airobject/rng.hpp"

namespace testutil {

using airobject::Matrix;

inline Matrix random_matrix(airobject::Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  return m;
}

// Random entries bounded away from zero, for inputs to kinked ops.
inline Matrix random_away_from_zero(airobject::Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                    double margin = 0.1) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double mag = rng.uniform(margin, 1.5);
    m.data()[i] = rng.bernoulli(0.5) ? mag : -mag;
  }
  return m;
}

}  // namespace testutil
