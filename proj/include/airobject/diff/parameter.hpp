#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>

namespace airobject::diff {

/// A named learnable tensor with its gradient accumulator.
///
/// The gradient buffer is mutable: it is scratch space written by
/// Tape::backward and consumed by the optimizer, not part of the
/// parameter's logical value. Forward code therefore takes parameters by
/// const reference.
template <typename Scalar>
struct Parameter {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::string name;
  Matrix value;
  mutable Matrix grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() const { grad.setZero(value.rows(), value.cols()); }
};

}  // namespace airobject::diff
