#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "airobject/diff/parameter.hpp"
#include "airobject/errors.hpp"

namespace airobject::diff {

template <typename Scalar>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
template <typename Scalar>
class Var {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Var() = default;

  const Matrix& value() const { return tape_->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar scalar() const;

  Tape<Scalar>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape<Scalar>;
  Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode operation tape.
///
/// Every op appends one node holding its value and, when any input is
/// differentiable, a closure that maps the node's adjoint onto its inputs.
/// backward() replays closures in reverse order. Node adjoints are rebuilt on
/// each call while Parameter::grad accumulates, so two backward passes over
/// the same tape double the parameter gradients.
///
/// A tape constructed with record_gradients = false treats every parameter
/// as a constant and stores no closures (inference mode).
template <typename Scalar>
class Tape {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Backprop = std::function<void(const Matrix& grad_out, const Matrix& out, Tape& tape)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool records_gradients() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var<Scalar> constant(Matrix value) {
    check_finite(value, "constant");
    Node node;
    node.value = std::move(value);
    return push(std::move(node));
  }

  /// Leaf referencing p.value without copying. Differentiable iff the tape
  /// records gradients and p.trainable is set. Parameter values are checked
  /// for finiteness where they change (Adam steps, checkpoint loads), not on
  /// every use.
  Var<Scalar> parameter(const Parameter<Scalar>& p) {
    Node node;
    node.param = &p;
    node.needs_grad = record_ && p.trainable;
    return push(std::move(node));
  }

  /// Appends an op result. `backprop` is kept only if an input needs a gradient.
  Var<Scalar> record(Matrix value, std::initializer_list<Var<Scalar>> inputs, Backprop backprop,
                     const char* op) {
    check_finite(value, op);
    Node node;
    node.value = std::move(value);
    for (const auto& in : inputs) node.needs_grad = node.needs_grad || needs_grad(in);
    if (node.needs_grad) node.backprop = std::move(backprop);
    return push(std::move(node));
  }

  /// Variadic-input form of record().
  Var<Scalar> record(Matrix value, const std::vector<Var<Scalar>>& inputs, Backprop backprop,
                     const char* op) {
    check_finite(value, op);
    Node node;
    node.value = std::move(value);
    for (const auto& in : inputs) node.needs_grad = node.needs_grad || needs_grad(in);
    if (node.needs_grad) node.backprop = std::move(backprop);
    return push(std::move(node));
  }

  const Matrix& value(const Var<Scalar>& v) const {
    const Node& node = nodes_[v.id_];
    return node.param ? node.param->value : node.value;
  }

  bool needs_grad(const Var<Scalar>& v) const { return nodes_[v.id_].needs_grad; }

  /// Seeds d(root)/d(root) = 1 and propagates to every differentiable leaf.
  void backward(const Var<Scalar>& root) {
    if (root.tape_ != this) throw UsageError("backward: root belongs to another tape");
    if (value(root).size() != 1) {
      throw DimensionError("backward: root must be a 1x1 scalar");
    }
    adjoints_.assign(nodes_.size(), Matrix());
    touched_.assign(nodes_.size(), 0);
    adjoints_[root.id_] = Matrix::Ones(1, 1);
    touched_[root.id_] = 1;
    for (std::size_t i = root.id_ + 1; i-- > 0;) {
      if (!touched_[i]) continue;
      Node& node = nodes_[i];
      if (!node.needs_grad) continue;
      if (node.param) {
        if (node.param->grad.rows() != node.param->value.rows() ||
            node.param->grad.cols() != node.param->value.cols()) {
          node.param->zero_grad();
        }
        node.param->grad += adjoints_[i];
      } else if (node.backprop) {
        node.backprop(adjoints_[i], node.value, *this);
      }
      adjoints_[i] = Matrix();  // release memory early
    }
    adjoints_.clear();
    touched_.clear();
  }

  /// Adds `contribution` to the adjoint of `target`. Called from backprop closures.
  template <typename Derived>
  void accumulate(const Var<Scalar>& target, const Eigen::MatrixBase<Derived>& contribution) {
    const std::size_t id = target.id_;
    if (!nodes_[id].needs_grad) return;
    if (touched_[id]) {
      adjoints_[id] += contribution;
    } else {
      adjoints_[id] = contribution;
      touched_[id] = 1;
    }
  }

  /// Smallest non-zero distance of any non-smooth op input from its kink,
  /// so gradient checks can reject evaluation points that straddle one.
  void note_kink_distance(Scalar d) { kink_margin_ = std::min(kink_margin_, d); }
  Scalar kink_margin() const { return kink_margin_; }

  /// Debug negative control: when set, linear-layer weight adjoints are
  /// scaled by 1.5 so gradient checks must fail.
  void set_corrupt_adjoints(bool on) { corrupt_ = on; }
  bool corrupt_adjoints() const { return corrupt_; }

 private:
  struct Node {
    Matrix value;
    const Parameter<Scalar>* param = nullptr;
    bool needs_grad = false;
    Backprop backprop;
  };

  Var<Scalar> push(Node node) {
    nodes_.push_back(std::move(node));
    return Var<Scalar>(this, nodes_.size() - 1);
  }

  static void check_finite(const Matrix& m, const char* op) {
    if (!m.allFinite()) {
      throw NumericalError(std::string("non-finite value produced by ") + op);
    }
  }

  bool record_;
  bool corrupt_ = false;
  Scalar kink_margin_ = std::numeric_limits<Scalar>::infinity();
  std::vector<Node> nodes_;
  std::vector<Matrix> adjoints_;
  std::vector<char> touched_;
};

template <typename Scalar>
Scalar Var<Scalar>::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw DimensionError("scalar(): value is not 1x1");
  return v(0, 0);
}

}  // namespace airobject::diff
