// SPDX-License-Identifier: Apache-2.0
#include "promogen/autodiff.h"

#include "promogen/errors.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace promogen::ad {

namespace {

void requireSameTape(Var a, Var b) {
  if (&a.tape() != &b.tape()) {
    throw Error("operands recorded on different tapes");
  }
}

void requireSameShape(Var a, Var b, const char* op) {
  requireSameTape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

double stableSigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stableSoftplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

} // namespace

const Matrix& Var::value() const {
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("scalar() on a non 1x1 node");
  }
  return v(0, 0);
}

Var Tape::push(Matrix value, bool requiresGrad, BackwardFn fn) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(fn), requiresGrad});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  return push(std::move(value), false, nullptr);
}

Var Tape::variable(Matrix value) {
  return push(std::move(value), true, nullptr);
}

Var Tape::parameter(const std::string& name, const Matrix& value) {
  if (auto it = parameters_.find(name); it != parameters_.end()) {
    return Var(this, it->second);
  }
  Var v = push(value, true, nullptr);
  parameters_.emplace(name, v.id());
  return v;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) {
      throw Error("operand recorded on a different tape");
    }
    needs = needs || nodes_[in.id()].requiresGrad;
  }
  return push(std::move(value), needs, needs ? std::move(fn) : nullptr);
}

void Tape::backward(Var root) {
  if (&root.tape() != this) {
    throw Error("backward root belongs to another tape");
  }
  Node& r = nodes_[root.id()];
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw ShapeError("backward requires a 1x1 root");
  }
  for (Node& n : nodes_) {
    n.grad.resize(0, 0);
  }
  if (!r.requiresGrad) {
    return;
  }
  r.grad = Matrix::Ones(1, 1);
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.backward && n.grad.size() != 0) {
      n.backward(*this, id);
    }
  }
}

Matrix Tape::gradient(int id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    return Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::accumulate(int id, const Matrix& g) {
  accumulate<Matrix>(id, g);
}

Matrix Tape::parameterGradient(const std::string& name) const {
  auto it = parameters_.find(name);
  if (it == parameters_.end()) {
    throw MissingGradient("parameter '" + name + "' was not recorded on this tape");
  }
  return gradient(it->second);
}

std::map<std::string, Matrix> Tape::parameterGradients() const {
  std::map<std::string, Matrix> out;
  for (const auto& [name, id] : parameters_) {
    out.emplace(name, gradient(id));
  }
  return out;
}

Var add(Var a, Var b) {
  requireSameShape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.incoming(self));
    t.accumulate(ib, t.incoming(self));
  });
}

Var sub(Var a, Var b) {
  requireSameShape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.incoming(self));
    t.accumulate(ib, -t.incoming(self));
  });
}

Var mul(Var a, Var b) {
  requireSameShape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return a.tape().record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.incoming(self);
    if (t.requiresGrad(ia)) {
      t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    }
    if (t.requiresGrad(ib)) {
      t.accumulate(ib, g.cwiseProduct(t.value(ia)));
    }
  });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  return a.tape().record(a.value() * s, {a}, [ia, s](Tape& t, int self) { t.accumulate(ia, t.incoming(self) * s); });
}

Var shift(Var a, double s) {
  const int ia = a.id();
  return a.tape().record(a.value().array() + s, {a}, [ia](Tape& t, int self) { t.accumulate(ia, t.incoming(self)); });
}

Var neg(Var a) {
  return scale(a, -1.0);
}

Var addRow(Var a, Var row) {
  requireSameTape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("addRow: row must be 1 x " + std::to_string(a.cols()));
  }
  const int ia = a.id(), ir = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape().record(std::move(out), {a, row}, [ia, ir](Tape& t, int self) {
    t.accumulate(ia, t.incoming(self));
    if (t.requiresGrad(ir)) {
      t.accumulate(ir, t.incoming(self).colwise().sum());
    }
  });
}

Var mulRow(Var a, Var row) {
  requireSameTape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("mulRow: row must be 1 x " + std::to_string(a.cols()));
  }
  const int ia = a.id(), ir = row.id();
  Matrix out = a.value().array().rowwise() * row.value().row(0).array();
  return a.tape().record(std::move(out), {a, row}, [ia, ir](Tape& t, int self) {
    const Matrix& g = t.incoming(self);
    if (t.requiresGrad(ia)) {
      t.accumulate(ia, (g.array().rowwise() * t.value(ir).row(0).array()).matrix());
    }
    if (t.requiresGrad(ir)) {
      t.accumulate(ir, g.cwiseProduct(t.value(ia)).colwise().sum());
    }
  });
}

Var broadcastRows(Var row, Eigen::Index n) {
  if (row.rows() != 1) {
    throw ShapeError("broadcastRows: expected a single row");
  }
  const int ir = row.id();
  Matrix out = row.value().replicate(n, 1);
  return row.tape().record(std::move(out), {row}, [ir](Tape& t, int self) {
    t.accumulate(ir, t.incoming(self).colwise().sum());
  });
}

Var matmul(Var a, Var b) {
  requireSameTape(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + ")");
  }
  const int ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.incoming(self);
    if (t.requiresGrad(ia)) {
      t.accumulate(ia, g * t.value(ib).transpose());
    }
    if (t.requiresGrad(ib)) {
      t.accumulate(ib, t.value(ia).transpose() * g);
    }
  });
}

Var matmulNT(Var a, Var b) {
  requireSameTape(a, b);
  if (a.cols() != b.cols()) {
    throw ShapeError("matmulNT: column counts differ");
  }
  const int ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value().transpose();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.incoming(self);
    if (t.requiresGrad(ia)) {
      t.accumulate(ia, g * t.value(ib));
    }
    if (t.requiresGrad(ib)) {
      t.accumulate(ib, g.transpose() * t.value(ia));
    }
  });
}

Var sum(Var a) {
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, int self) {
    const Matrix& v = t.value(ia);
    t.accumulate(ia, Matrix::Constant(v.rows(), v.cols(), t.incoming(self)(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) {
    throw ShapeError("mean of an empty matrix");
  }
  return scale(sum(a), 1.0 / n);
}

Var meanRows(Var a) {
  const Eigen::Index n = a.rows();
  if (n == 0) {
    throw ShapeError("meanRows of an empty matrix");
  }
  const int ia = a.id();
  Matrix out = a.value().colwise().mean();
  return a.tape().record(std::move(out), {a}, [ia, n](Tape& t, int self) {
    t.accumulate(ia, (t.incoming(self) / static_cast<double>(n)).replicate(n, 1));
  });
}

Var sumCols(Var a) {
  const Eigen::Index c = a.cols();
  const int ia = a.id();
  Matrix out = a.value().rowwise().sum();
  return a.tape().record(std::move(out), {a}, [ia, c](Tape& t, int self) {
    t.accumulate(ia, t.incoming(self).replicate(1, c));
  });
}

Var square(Var a) {
  const int ia = a.id();
  return a.tape().record(a.value().array().square().matrix(), {a}, [ia](Tape& t, int self) {
    t.accumulate(ia, (2.0 * t.value(ia).array() * t.incoming(self).array()).matrix());
  });
}

Var sqrt(Var a) {
  if ((a.value().array() < 0.0).any()) {
    throw Error("sqrt of a negative entry");
  }
  const int ia = a.id();
  Matrix out = a.value().array().sqrt().matrix();
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, int self) {
    t.accumulate(ia, (0.5 * t.incoming(self).array() / t.value(self).array()).matrix());
  });
}

Var silu(Var a) {
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([](double x) { return x * stableSigmoid(x); });
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, int self) {
    Matrix d = t.value(ia).unaryExpr([](double x) {
      const double s = stableSigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    });
    t.accumulate(ia, d.cwiseProduct(t.incoming(self)));
  });
}

Var relu(Var a) {
  const int ia = a.id();
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, int self) {
    Matrix mask = (t.value(ia).array() > 0.0).cast<double>().matrix();
    t.accumulate(ia, mask.cwiseProduct(t.incoming(self)));
  });
}

Var sigmoid(Var a) {
  const int ia = a.id();
  Matrix out = a.value().unaryExpr(&stableSigmoid);
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.accumulate(ia, (y.array() * (1.0 - y.array()) * t.incoming(self).array()).matrix());
  });
}

Var softplus(Var a) {
  const int ia = a.id();
  Matrix out = a.value().unaryExpr(&stableSoftplus);
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, int self) {
    t.accumulate(ia, t.value(ia).unaryExpr(&stableSigmoid).cwiseProduct(t.incoming(self)));
  });
}

Var minimum(Var a, Var b) {
  requireSameShape(a, b, "minimum");
  const int ia = a.id(), ib = b.id();
  Matrix out = a.value().cwiseMin(b.value());
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    // Ties route the gradient to the first operand.
    Matrix pickA = (t.value(ia).array() <= t.value(ib).array()).cast<double>().matrix();
    const Matrix& g = t.incoming(self);
    t.accumulate(ia, pickA.cwiseProduct(g));
    if (t.requiresGrad(ib)) {
      t.accumulate(ib, (1.0 - pickA.array()).matrix().cwiseProduct(g));
    }
  });
}

Var softmaxRows(Var a) {
  const int ia = a.id();
  Matrix out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.incoming(self);
    Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    Matrix d = y.cwiseProduct(g - dots.replicate(1, g.cols()));
    t.accumulate(ia, d);
  });
}

Var layerNormRows(Var a, double eps) {
  const Eigen::Index c = a.cols();
  if (c == 0) {
    throw ShapeError("layerNormRows of an empty row");
  }
  const int ia = a.id();
  const Matrix& x = a.value();
  Eigen::VectorXd mu = x.rowwise().mean();
  Matrix centered = x - mu.replicate(1, c);
  Eigen::VectorXd invStd = ((centered.array().square().rowwise().sum() / static_cast<double>(c)) + eps).rsqrt();
  Matrix out = centered.array().colwise() * invStd.array();
  return a.tape().record(std::move(out), {a}, [ia, invStd, c](Tape& t, int self) {
    const Matrix& xhat = t.value(self);
    const Matrix& g = t.incoming(self);
    Eigen::VectorXd gMean = g.rowwise().mean();
    Eigen::VectorXd gxMean = g.cwiseProduct(xhat).rowwise().mean();
    Matrix d = g - gMean.replicate(1, c) - (xhat.array().colwise() * gxMean.array()).matrix();
    t.accumulate(ia, (d.array().colwise() * invStd.array()).matrix());
  });
}

Var concatCols(std::initializer_list<Var> parts) {
  return concatCols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concatCols(std::span<const Var> parts) {
  if (parts.empty()) {
    throw ShapeError("concatCols of nothing");
  }
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    requireSameTape(parts[0], p);
    if (p.rows() != rows) {
      throw ShapeError("concatCols: row counts differ");
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    spans.emplace_back(p.id(), at);
    at += p.cols();
  }
  return parts[0].tape().record(std::move(out), parts, [spans](Tape& t, int self) {
    const Matrix& g = t.incoming(self);
    for (const auto& [id, start] : spans) {
      if (t.requiresGrad(id)) {
        t.accumulate(id, g.middleCols(start, t.value(id).cols()));
      }
    }
  });
}

Var sliceCols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("sliceCols out of range");
  }
  const int ia = a.id();
  return a.tape().record(a.value().middleCols(start, count), {a}, [ia, start, count](Tape& t, int self) {
    const Matrix& v = t.value(ia);
    Matrix g = Matrix::Zero(v.rows(), v.cols());
    g.middleCols(start, count) = t.incoming(self);
    t.accumulate(ia, g);
  });
}

Var sliceRows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw ShapeError("sliceRows out of range");
  }
  const int ia = a.id();
  return a.tape().record(a.value().middleRows(start, count), {a}, [ia, start, count](Tape& t, int self) {
    const Matrix& v = t.value(ia);
    Matrix g = Matrix::Zero(v.rows(), v.cols());
    g.middleRows(start, count) = t.incoming(self);
    t.accumulate(ia, g);
  });
}

Var gatherRows(Var a, std::span<const int> rows) {
  std::vector<int> idx(rows.begin(), rows.end());
  Matrix out(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= a.rows()) {
      throw ShapeError("gatherRows index out of range");
    }
    out.row(static_cast<Eigen::Index>(k)) = a.value().row(idx[k]);
  }
  const int ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, idx](Tape& t, int self) {
    const Matrix& v = t.value(ia);
    const Matrix& g = t.incoming(self);
    Matrix d = Matrix::Zero(v.rows(), v.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      d.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
    }
    t.accumulate(ia, d);
  });
}

Var scatterRows(Var base, Var src, std::span<const int> rows) {
  requireSameTape(base, src);
  std::vector<int> idx(rows.begin(), rows.end());
  if (src.rows() != static_cast<Eigen::Index>(idx.size()) || src.cols() != base.cols()) {
    throw ShapeError("scatterRows: source shape does not match index list");
  }
  Matrix out = base.value();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= base.rows()) {
      throw ShapeError("scatterRows index out of range");
    }
    out.row(idx[k]) = src.value().row(static_cast<Eigen::Index>(k));
  }
  const int ib = base.id(), is = src.id();
  return base.tape().record(std::move(out), {base, src}, [ib, is, idx](Tape& t, int self) {
    const Matrix& g = t.incoming(self);
    if (t.requiresGrad(ib)) {
      Matrix d = g;
      for (int r : idx) {
        d.row(r).setZero();
      }
      t.accumulate(ib, d);
    }
    if (t.requiresGrad(is)) {
      Matrix d(static_cast<Eigen::Index>(idx.size()), g.cols());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        d.row(static_cast<Eigen::Index>(k)) = g.row(idx[k]);
      }
      t.accumulate(is, d);
    }
  });
}

Var diffRows(Var a) {
  const Eigen::Index n = a.rows();
  if (n < 2) {
    throw ShapeError("diffRows needs at least two rows");
  }
  const int ia = a.id();
  Matrix out = a.value().bottomRows(n - 1) - a.value().topRows(n - 1);
  return a.tape().record(std::move(out), {a}, [ia, n](Tape& t, int self) {
    const Matrix& g = t.incoming(self);
    Matrix d = Matrix::Zero(n, g.cols());
    d.bottomRows(n - 1) += g;
    d.topRows(n - 1) -= g;
    t.accumulate(ia, d);
  });
}

Var detach(Var a) {
  return a.tape().constant(a.value());
}

} // namespace promogen::ad
