// SPDX-License-Identifier: Apache-2.0
#include "promogen/parameters.h"

#include "promogen/errors.h"

#include <cmath>

namespace promogen {

void ParameterSet::set(const std::string& name, Matrix value) {
  tensors_[name] = std::move(value);
}

const Matrix& ParameterSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw Error("unknown parameter '" + name + "'");
  }
  return it->second;
}

Matrix& ParameterSet::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw Error("unknown parameter '" + name + "'");
  }
  return it->second;
}

std::size_t ParameterSet::scalarCount() const {
  std::size_t n = 0;
  for (const auto& [name, m] : tensors_) {
    n += static_cast<std::size_t>(m.size());
  }
  return n;
}

bool ParameterSet::allFinite() const {
  for (const auto& [name, m] : tensors_) {
    if (!m.allFinite()) {
      return false;
    }
  }
  return true;
}

ad::Var ParameterSet::use(ad::Tape& tape, const std::string& name, bool trainable) const {
  return trainable ? tape.parameter(name, at(name)) : tape.constant(at(name));
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (tensors_.size() != other.tensors_.size()) {
    return false;
  }
  for (auto a = tensors_.begin(), b = other.tensors_.begin(); a != tensors_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.rows() != b->second.rows() || a->second.cols() != b->second.cols() ||
        a->second != b->second) {
      return false;
    }
  }
  return true;
}

void accumulateGradients(Gradients& into, const Gradients& delta, double scale) {
  for (const auto& [name, g] : delta) {
    auto it = into.find(name);
    if (it == into.end()) {
      into.emplace(name, g * scale);
    } else {
      it->second += g * scale;
    }
  }
}

double gradientNorm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    sq += g.squaredNorm();
  }
  return std::sqrt(sq);
}

Matrix glorotUniform(Eigen::Index fanIn, Eigen::Index fanOut, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fanIn + fanOut));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(fanIn, fanOut);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      m(r, c) = dist(rng);
    }
  }
  return m;
}

Matrix normalInit(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      m(r, c) = dist(rng);
    }
  }
  return m;
}

void Adam::step(ParameterSet& params, const Gradients& grads) {
  ++step_;
  double clip = 1.0;
  if (options_.clipNorm > 0.0) {
    const double norm = gradientNorm(grads);
    if (norm > options_.clipNorm) {
      clip = options_.clipNorm / norm;
    }
  }
  const double bias1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
  for (const auto& [name, rawGrad] : grads) {
    Matrix& p = params.at(name);
    if (rawGrad.rows() != p.rows() || rawGrad.cols() != p.cols()) {
      throw ShapeError("gradient shape mismatch for '" + name + "'");
    }
    Matrix g = rawGrad * clip;
    auto [mIt, mNew] = m_.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    auto [vIt, vNew] = v_.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    Matrix& m = mIt->second;
    Matrix& v = vIt->second;
    m = options_.beta1 * m + (1.0 - options_.beta1) * g;
    v = options_.beta2 * v + (1.0 - options_.beta2) * g.cwiseAbs2();
    const double lr = options_.learningRate;
    p.array() -= lr * ((m.array() / bias1) / ((v.array() / bias2).sqrt() + options_.epsilon));
    if (options_.weightDecay > 0.0) {
      p *= (1.0 - lr * options_.weightDecay);
    }
  }
}

} // namespace promogen
