// SPDX-License-Identifier: Apache-2.0
//
// Minimal tape-based reverse-mode differentiation over dense matrices.
//
// A Tape records every intermediate matrix together with a closure that
// pushes the incoming gradient back to the operands. Operations are free
// functions taking Var handles; all operands must live on the same tape.
// Gradients are accumulated in double precision and only for nodes that
// (transitively) depend on a variable or parameter.
#pragma once

#include <Eigen/Core>

#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace promogen::ad {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Node that never receives a gradient.
  Var constant(Matrix value);
  /// Differentiable input.
  Var variable(Matrix value);
  /// Named trainable tensor. Recording the same name twice returns the first node.
  Var parameter(const std::string& name, const Matrix& value);

  /// Records the result of an operation. `fn` runs during backward() only when
  /// the node has a gradient and one of `inputs` requires one.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn fn);

  /// Reverse sweep from a 1x1 root.
  void backward(Var root);

  bool requiresGrad(int id) const { return nodes_[id].requiresGrad; }
  bool requiresGrad(Var v) const { return requiresGrad(v.id()); }
  const Matrix& value(int id) const { return nodes_[id].value; }
  /// Gradient of `id`; a zero matrix if nothing flowed into it.
  Matrix gradient(int id) const;
  Matrix gradient(Var v) const { return gradient(v.id()); }
  /// Incoming gradient of the node being processed; only valid inside a BackwardFn.
  const Matrix& incoming(int id) const { return nodes_[id].grad; }

  /// Adds `g` into the gradient of `id` if that node requires one.
  void accumulate(int id, const Matrix& g);
  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    if (!nodes_[id].requiresGrad) {
      return;
    }
    Matrix& dst = nodes_[id].grad;
    if (dst.size() == 0) {
      dst = g;
    } else {
      dst += g;
    }
  }

  /// Throws MissingGradient if `name` was never recorded on this tape.
  Matrix parameterGradient(const std::string& name) const;
  std::map<std::string, Matrix> parameterGradients() const;
  bool hasParameter(const std::string& name) const { return parameters_.count(name) != 0; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool requiresGrad = false;
  };

  Var push(Matrix value, bool requiresGrad, BackwardFn fn);

  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> parameters_;
};

// Elementwise arithmetic. Shapes must match exactly.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var shift(Var a, double s);
Var neg(Var a);

/// a (n x c) + row (1 x c) on every row.
Var addRow(Var a, Var row);
/// a (n x c) * row (1 x c) elementwise on every row.
Var mulRow(Var a, Var row);
/// Repeats a 1 x c row n times.
Var broadcastRows(Var row, Eigen::Index n);

Var matmul(Var a, Var b);
/// a * b^T.
Var matmulNT(Var a, Var b);

Var sum(Var a);
Var mean(Var a);
/// Column means, 1 x c.
Var meanRows(Var a);
/// Row sums, n x 1.
Var sumCols(Var a);

Var square(Var a);
Var sqrt(Var a);
Var silu(Var a);
Var relu(Var a);
Var sigmoid(Var a);
/// log(1 + exp(a)), computed stably.
Var softplus(Var a);
Var minimum(Var a, Var b);

Var softmaxRows(Var a);
/// Zero-mean, unit-variance rows without affine parameters.
Var layerNormRows(Var a, double eps = 1e-6);

Var concatCols(std::span<const Var> parts);
Var concatCols(std::initializer_list<Var> parts);
Var sliceCols(Var a, Eigen::Index start, Eigen::Index count);
Var sliceRows(Var a, Eigen::Index start, Eigen::Index count);
Var gatherRows(Var a, std::span<const int> rows);
/// Copy of `base` with rows `rows[k]` replaced by row k of `src`.
Var scatterRows(Var base, Var src, std::span<const int> rows);
/// a[i+1] - a[i], (n-1) x c.
Var diffRows(Var a);
/// Same value, cut from the graph.
Var detach(Var a);

} // namespace promogen::ad
