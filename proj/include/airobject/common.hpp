#pragma once

#include <Eigen/Dense>

#include "airobject/errors.hpp"

namespace airobject {

/// Working precision of the model, training and evaluation code.
using Real = double;

using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

/// N x 2 keypoint coordinates, one point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// (x_min, y_min, x_max, y_max)
using BoundingBox = Eigen::Vector4d;

/// Norms at or below this are treated as zero by every normalization.
inline constexpr Real kNormEpsilon = 1e-12;

}  // namespace airobject
