#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "airobject/diff/parameter.hpp"
#include "airobject/diff/tape.hpp"

namespace airobject::diff {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  /// Smallest distance of a non-smooth op input from its kink at the
  /// evaluation point (infinity when the function is smooth).
  double kink_margin = 0.0;
  double loss = 0.0;
};

/// Compares reverse-mode gradients against central differences.
///
/// `f(tape)` must build a scalar loss on the given tape from `params`. For
/// each parameter tensor P the error is
///   |g_analytic - g_numeric|_2 / max(1e-8, |g_numeric|_2)
/// with norms taken over the tensor, and the maximum over tensors is
/// returned. Parameter gradients are overwritten.
template <typename Scalar, typename LossFn>
GradCheckResult finite_diff_check(LossFn&& f, const std::vector<Parameter<Scalar>*>& params,
                                  Scalar eps) {
  using Matrix = typename Parameter<Scalar>::Matrix;
  GradCheckResult result;

  for (auto* p : params) p->zero_grad();
  {
    Tape<Scalar> tape;
    Var<Scalar> loss = f(tape);
    result.loss = static_cast<double>(loss.scalar());
    result.kink_margin = static_cast<double>(tape.kink_margin());
    tape.backward(loss);
  }

  auto evaluate = [&f]() {
    Tape<Scalar> tape(false);
    return f(tape).scalar();
  };

  for (auto* p : params) {
    Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      Scalar& x = p->value.data()[i];
      const Scalar saved = x;
      x = saved + eps;
      const Scalar up = evaluate();
      x = saved - eps;
      const Scalar down = evaluate();
      x = saved;
      numeric.data()[i] = (up - down) / (Scalar(2) * eps);
    }
    const double err = static_cast<double>((p->grad - numeric).norm()) /
                       std::max(1e-8, static_cast<double>(numeric.norm()));
    if (result.worst_parameter.empty() || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_parameter = p->name;
    }
  }
  return result;
}

}  // namespace airobject::diff
