#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "airobject/diff/parameter.hpp"
#include "airobject/errors.hpp"

namespace airobject::diff {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction (Kingma & Ba). Moments are kept per parameter in
/// the order the parameters are passed to step(); that order must not change
/// between steps.
template <typename Scalar>
class Adam {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  long steps() const { return step_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

  /// Applies one update from each parameter's current gradient. Gradients are
  /// left untouched. A non-finite gradient aborts before any parameter moves.
  void step(const std::vector<Parameter<Scalar>*>& params) {
    for (const auto* p : params) {
      if (!p->grad.allFinite()) throw NumericalError("adam: non-finite gradient in " + p->name);
      if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) {
        throw DimensionError("adam: gradient shape mismatch in " + p->name);
      }
    }
    if (m_.empty()) {
      for (const auto* p : params) {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      }
    }
    if (m_.size() != params.size()) throw DimensionError("adam: parameter list changed size");

    ++step_;
    const auto b1 = static_cast<Scalar>(config_.beta1);
    const auto b2 = static_cast<Scalar>(config_.beta2);
    const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(config_.beta1, step_));
    const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(config_.beta2, step_));
    const auto lr = static_cast<Scalar>(config_.lr);
    const auto eps = static_cast<Scalar>(config_.epsilon);
    for (std::size_t k = 0; k < params.size(); ++k) {
      Parameter<Scalar>& p = *params[k];
      m_[k] = b1 * m_[k] + (Scalar(1) - b1) * p.grad;
      v_[k] = b2 * v_[k] + (Scalar(1) - b2) * p.grad.cwiseAbs2();
      if (!p.trainable) continue;
      p.value.array() -=
          lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps);
      if (!p.value.allFinite()) throw NumericalError("adam: step made " + p.name + " non-finite");
    }
  }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long step_ = 0;
};

}  // namespace airobject::diff
