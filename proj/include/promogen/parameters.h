// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "promogen/autodiff.h"

#include <map>
#include <random>
#include <string>

namespace promogen {

using Matrix = Eigen::MatrixXd;

/// Named tensors in deterministic (lexicographic) order.
class ParameterSet {
 public:
  void set(const std::string& name, Matrix value);
  /// Throws Error if absent.
  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

  std::size_t size() const { return tensors_.size(); }
  std::size_t scalarCount() const;
  bool allFinite() const;

  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }

  /// Records the tensor on `tape`: as a trainable parameter when `trainable`, else as a constant.
  ad::Var use(ad::Tape& tape, const std::string& name, bool trainable = true) const;

  bool operator==(const ParameterSet& other) const;

 private:
  std::map<std::string, Matrix> tensors_;
};

/// Parameter source for one forward pass. When `trainable` is false every tensor
/// enters the tape as a constant and no backward closures are kept.
struct Graph {
  ad::Tape& tape;
  const ParameterSet& params;
  bool trainable = true;

  ad::Var operator()(const std::string& name) const { return params.use(tape, name, trainable); }
};

using Gradients = std::map<std::string, Matrix>;

/// g += scale * delta for every entry of delta; missing keys are created.
void accumulateGradients(Gradients& into, const Gradients& delta, double scale = 1.0);

/// Global L2 norm over all gradient entries.
double gradientNorm(const Gradients& grads);

/// Uniform Glorot initialisation for a fan_in x fan_out weight.
Matrix glorotUniform(Eigen::Index fanIn, Eigen::Index fanOut, std::mt19937_64& rng);
Matrix normalInit(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng);

/// Adaptive-moment optimizer. State is keyed by parameter name.
class Adam {
 public:
  struct Options {
    double learningRate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weightDecay = 0.0;
    /// Global-norm clip applied before the update; <= 0 disables.
    double clipNorm = 0.0;
  };

  explicit Adam(Options options) : options_(options) {}

  void step(ParameterSet& params, const Gradients& grads);
  long steps() const { return step_; }
  const Options& options() const { return options_; }

 private:
  Options options_;
  std::map<std::string, Matrix> m_;
  std::map<std::string, Matrix> v_;
  long step_ = 0;
};

} // namespace promogen
