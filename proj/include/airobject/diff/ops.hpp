#pragma once

// Differentiable primitives over Tape. Each op computes its forward value
// with Eigen and registers the matching adjoint.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "airobject/diff/tape.hpp"
#include "airobject/errors.hpp"

namespace airobject::diff {

namespace detail {

inline void require(bool ok, const char* op, const char* what) {
  if (!ok) throw DimensionError(std::string(op) + ": " + what);
}

template <typename Scalar>
void note_kinks(Tape<Scalar>& tape, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x,
                Scalar at = Scalar(0)) {
  if (!tape.records_gradients()) return;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Scalar d = std::abs(x.data()[i] - at);
    if (d > Scalar(0)) tape.note_kink_distance(d);
  }
}

}  // namespace detail

/// y = x * w^T. x: N x in, w: out x in.
template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& x, const Var<Scalar>& w) {
  detail::require(x.cols() == w.cols(), "linear", "inner dimensions disagree");
  auto& t = x.tape();
  return t.record(
      x.value() * w.value().transpose(), {x, w},
      [x, w](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(x, g * w.value());
        if (tape.corrupt_adjoints()) {
          tape.accumulate(w, Scalar(1.5) * (g.transpose() * x.value()));
        } else {
          tape.accumulate(w, g.transpose() * x.value());
        }
      },
      "linear");
}

/// y = x * w^T + b, with b a 1 x out row broadcast over rows.
template <typename Scalar>
Var<Scalar> affine(const Var<Scalar>& x, const Var<Scalar>& w, const Var<Scalar>& b) {
  detail::require(x.cols() == w.cols(), "affine", "inner dimensions disagree");
  detail::require(b.rows() == 1 && b.cols() == w.rows(), "affine", "bias must be 1 x out");
  auto& t = x.tape();
  typename Tape<Scalar>::Matrix y = x.value() * w.value().transpose();
  y.rowwise() += b.value().row(0);
  return t.record(
      std::move(y), {x, w, b},
      [x, w, b](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(x, g * w.value());
        const Scalar s = tape.corrupt_adjoints() ? Scalar(1.5) : Scalar(1);
        tape.accumulate(w, s * (g.transpose() * x.value()));
        tape.accumulate(b, g.colwise().sum());
      },
      "affine");
}

/// y = a * b
template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.cols() == b.rows(), "matmul", "inner dimensions disagree");
  return a.tape().record(
      a.value() * b.value(), {a, b},
      [a, b](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(a, g * b.value().transpose());
        tape.accumulate(b, a.value().transpose() * g);
      },
      "matmul");
}

/// y = a * b^T
template <typename Scalar>
Var<Scalar> matmul_nt(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.cols() == b.cols(), "matmul_nt", "inner dimensions disagree");
  return a.tape().record(
      a.value() * b.value().transpose(), {a, b},
      [a, b](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(a, g * b.value());
        tape.accumulate(b, g.transpose() * a.value());
      },
      "matmul_nt");
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add", "shape mismatch");
  return a.tape().record(
      a.value() + b.value(), {a, b},
      [a, b](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(a, g);
        tape.accumulate(b, g);
      },
      "add");
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "sub", "shape mismatch");
  return a.tape().record(
      a.value() - b.value(), {a, b},
      [a, b](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(a, g);
        tape.accumulate(b, -g);
      },
      "sub");
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar c) {
  return x.tape().record(
      c * x.value(), {x}, [x, c](const auto& g, const auto&, Tape<Scalar>& tape) { tape.accumulate(x, c * g); },
      "scale");
}

template <typename Scalar>
Var<Scalar> add_scalar(const Var<Scalar>& x, Scalar c) {
  typename Tape<Scalar>::Matrix y = x.value().array() + c;
  return x.tape().record(
      std::move(y), {x}, [x](const auto& g, const auto&, Tape<Scalar>& tape) { tape.accumulate(x, g); },
      "add_scalar");
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  return add(a, b);
}
template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) {
  return sub(a, b);
}
template <typename Scalar>
Var<Scalar> operator*(Scalar c, const Var<Scalar>& x) {
  return scale(x, c);
}

/// Hadamard product.
template <typename Scalar>
Var<Scalar> elementwise_mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "elementwise_mul",
                  "shape mismatch");
  return a.tape().record(
      a.value().cwiseProduct(b.value()), {a, b},
      [a, b](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(a, g.cwiseProduct(b.value()));
        tape.accumulate(b, g.cwiseProduct(a.value()));
      },
      "elementwise_mul");
}

/// max(x, 0); the subgradient at exactly 0 is 0.
template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  detail::note_kinks(x.tape(), x.value());
  return x.tape().record(
      x.value().cwiseMax(Scalar(0)), {x},
      [x](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(x, (x.value().array() > Scalar(0)).select(g.array(), Scalar(0)).matrix());
      },
      "relu");
}

/// max(x, slope * x) for 0 < slope < 1; derivative `slope` for x <= 0.
template <typename Scalar>
Var<Scalar> leaky_relu(const Var<Scalar>& x, Scalar slope) {
  detail::note_kinks(x.tape(), x.value());
  typename Tape<Scalar>::Matrix y =
      (x.value().array() > Scalar(0)).select(x.value().array(), slope * x.value().array()).matrix();
  return x.tape().record(
      std::move(y), {x},
      [x, slope](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(x, (x.value().array() > Scalar(0)).select(g.array(), slope * g.array()).matrix());
      },
      "leaky_relu");
}

/// Row-wise softmax restricted to entries where mask != 0, with max
/// subtraction. Masked entries are exactly 0. A row without any unmasked
/// entry is an error.
template <typename Scalar, typename MaskDerived>
Var<Scalar> masked_softmax(const Var<Scalar>& scores, const Eigen::MatrixBase<MaskDerived>& mask) {
  using Matrix = typename Tape<Scalar>::Matrix;
  const Matrix& s = scores.value();
  detail::require(mask.rows() == s.rows() && mask.cols() == s.cols(), "masked_softmax",
                  "mask shape mismatch");
  Matrix y = Matrix::Zero(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    bool any = false;
    Scalar row_max = Scalar(0);
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (mask(i, j) == 0) continue;
      row_max = any ? std::max(row_max, s(i, j)) : s(i, j);
      any = true;
    }
    if (!any) throw DataError("masked_softmax: row " + std::to_string(i) + " is fully masked");
    Scalar total = 0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (mask(i, j) == 0) continue;
      y(i, j) = std::exp(s(i, j) - row_max);
      total += y(i, j);
    }
    y.row(i) /= total;
  }
  return scores.tape().record(
      std::move(y), {scores},
      [scores](const auto& g, const auto& y_out, Tape<Scalar>& tape) {
        // ds = y .* (g - rowsum(g .* y)); masked entries have y = 0.
        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inner = g.cwiseProduct(y_out).rowwise().sum();
        Matrix ds = y_out.cwiseProduct(g - inner.replicate(1, g.cols()));
        tape.accumulate(scores, ds);
      },
      "masked_softmax");
}

/// Each row divided by its Euclidean norm. Rows with norm <= 1e-12 are an error.
template <typename Scalar>
Var<Scalar> l2_normalize_rows(const Var<Scalar>& x) {
  using Matrix = typename Tape<Scalar>::Matrix;
  using Col = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Matrix& v = x.value();
  const Col norms = v.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > Scalar(1e-12))) {
      throw NumericalError("l2_normalize: row " + std::to_string(i) + " has zero norm");
    }
  }
  Matrix y = norms.cwiseInverse().asDiagonal() * v;
  return x.tape().record(
      std::move(y), {x},
      [x, norms](const auto& g, const auto& y_out, Tape<Scalar>& tape) {
        // d x_i = (g_i - y_i (g_i . y_i)) / |x_i|
        const Col proj = g.cwiseProduct(y_out).rowwise().sum();
        Matrix dx = norms.cwiseInverse().asDiagonal() * (g - proj.asDiagonal() * y_out);
        tape.accumulate(x, dx);
      },
      "l2_normalize_rows");
}

/// Sum of absolute values as a 1x1; subgradient sign(0) = 0.
template <typename Scalar>
Var<Scalar> abs_sum(const Var<Scalar>& x) {
  typename Tape<Scalar>::Matrix y(1, 1);
  y(0, 0) = x.value().cwiseAbs().sum();
  detail::note_kinks(x.tape(), x.value());
  return x.tape().record(
      std::move(y), {x},
      [x](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(x, g(0, 0) * x.value().array().sign().matrix());
      },
      "abs_sum");
}

/// Sum of all entries as a 1x1.
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x) {
  typename Tape<Scalar>::Matrix y(1, 1);
  y(0, 0) = x.value().sum();
  return x.tape().record(
      std::move(y), {x},
      [x](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(x, Tape<Scalar>::Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
      },
      "sum");
}

/// Column-wise sum over rows: N x D -> 1 x D.
template <typename Scalar>
Var<Scalar> reduce_sum(const Var<Scalar>& x) {
  return x.tape().record(
      x.value().colwise().sum(), {x},
      [x](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(x, g.replicate(x.rows(), 1));
      },
      "reduce_sum");
}

/// Column-wise mean over rows: N x D -> 1 x D.
template <typename Scalar>
Var<Scalar> reduce_mean(const Var<Scalar>& x) {
  detail::require(x.rows() > 0, "reduce_mean", "empty input");
  const Scalar inv = Scalar(1) / static_cast<Scalar>(x.rows());
  return x.tape().record(
      x.value().colwise().mean(), {x},
      [x, inv](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(x, (inv * g).replicate(x.rows(), 1));
      },
      "reduce_mean");
}

/// [a b] for equal row counts.
template <typename Scalar>
Var<Scalar> concat_columns(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows(), "concat_columns", "row counts differ");
  typename Tape<Scalar>::Matrix y(a.rows(), a.cols() + b.cols());
  y << a.value(), b.value();
  const Eigen::Index split = a.cols();
  return a.tape().record(
      std::move(y), {a, b},
      [a, b, split](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(a, g.leftCols(split));
        tape.accumulate(b, g.rightCols(g.cols() - split));
      },
      "concat_columns");
}

/// Vertical stack of blocks with equal column counts.
template <typename Scalar>
Var<Scalar> concat_rows(const std::vector<Var<Scalar>>& blocks) {
  detail::require(!blocks.empty(), "concat_rows", "no blocks");
  const Eigen::Index cols = blocks.front().cols();
  Eigen::Index rows = 0;
  for (const auto& b : blocks) {
    detail::require(b.cols() == cols, "concat_rows", "column counts differ");
    rows += b.rows();
  }
  typename Tape<Scalar>::Matrix y(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    y.middleRows(offset, b.rows()) = b.value();
    offset += b.rows();
  }
  return blocks.front().tape().record(
      std::move(y), blocks,
      [blocks](const auto& g, const auto&, Tape<Scalar>& tape) {
        Eigen::Index off = 0;
        for (const auto& b : blocks) {
          tape.accumulate(b, g.middleRows(off, b.rows()));
          off += b.rows();
        }
      },
      "concat_rows");
}

/// E(i, j) = u(i) + v(j) for column vectors u (N x 1) and v (M x 1).
template <typename Scalar>
Var<Scalar> outer_sum(const Var<Scalar>& u, const Var<Scalar>& v) {
  detail::require(u.cols() == 1 && v.cols() == 1, "outer_sum", "inputs must be column vectors");
  typename Tape<Scalar>::Matrix y = u.value().replicate(1, v.rows());
  y.rowwise() += v.value().col(0).transpose();
  return u.tape().record(
      std::move(y), {u, v},
      [u, v](const auto& g, const auto&, Tape<Scalar>& tape) {
        tape.accumulate(u, g.rowwise().sum());
        tape.accumulate(v, g.colwise().sum().transpose());
      },
      "outer_sum");
}

/// Column j as an N x 1.
template <typename Scalar>
Var<Scalar> column(const Var<Scalar>& x, Eigen::Index j) {
  detail::require(j >= 0 && j < x.cols(), "column", "index out of range");
  return x.tape().record(
      x.value().col(j), {x},
      [x, j](const auto& g, const auto&, Tape<Scalar>& tape) {
        typename Tape<Scalar>::Matrix dx = Tape<Scalar>::Matrix::Zero(x.rows(), x.cols());
        dx.col(j) = g.col(0);
        tape.accumulate(x, dx);
      },
      "column");
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& x) {
  return x.tape().record(
      x.value().transpose(), {x},
      [x](const auto& g, const auto&, Tape<Scalar>& tape) { tape.accumulate(x, g.transpose()); },
      "transpose");
}

/// Entries x(r, c) for each (r, c) as a k x 1 column.
template <typename Scalar>
Var<Scalar> gather(const Var<Scalar>& x,
                   const std::vector<std::pair<Eigen::Index, Eigen::Index>>& entries) {
  typename Tape<Scalar>::Matrix y(static_cast<Eigen::Index>(entries.size()), 1);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto [r, c] = entries[k];
    detail::require(r >= 0 && r < x.rows() && c >= 0 && c < x.cols(), "gather",
                    "index out of range");
    y(static_cast<Eigen::Index>(k), 0) = x.value()(r, c);
  }
  return x.tape().record(
      std::move(y), {x},
      [x, entries](const auto& g, const auto&, Tape<Scalar>& tape) {
        typename Tape<Scalar>::Matrix dx = Tape<Scalar>::Matrix::Zero(x.rows(), x.cols());
        for (std::size_t k = 0; k < entries.size(); ++k) {
          dx(entries[k].first, entries[k].second) += g(static_cast<Eigen::Index>(k), 0);
        }
        tape.accumulate(x, dx);
      },
      "gather");
}

/// Rows of x at `indices`, in the given order.
template <typename Scalar>
Var<Scalar> select_rows(const Var<Scalar>& x, const std::vector<Eigen::Index>& indices) {
  detail::require(!indices.empty(), "select_rows", "no rows selected");
  typename Tape<Scalar>::Matrix y(static_cast<Eigen::Index>(indices.size()), x.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    detail::require(indices[k] >= 0 && indices[k] < x.rows(), "select_rows", "index out of range");
    y.row(static_cast<Eigen::Index>(k)) = x.value().row(indices[k]);
  }
  return x.tape().record(
      std::move(y), {x},
      [x, indices](const auto& g, const auto&, Tape<Scalar>& tape) {
        typename Tape<Scalar>::Matrix dx = Tape<Scalar>::Matrix::Zero(x.rows(), x.cols());
        for (std::size_t k = 0; k < indices.size(); ++k) {
          dx.row(indices[k]) += g.row(static_cast<Eigen::Index>(k));
        }
        tape.accumulate(x, dx);
      },
      "select_rows");
}

}  // namespace airobject::diff
