// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace promogen {

using Matrix = Eigen::MatrixXd;

enum class ScheduleKind { kCosine, kLinear };

ScheduleKind parseScheduleKind(const std::string& name);
std::string toString(ScheduleKind kind);

/// Discrete variance-preserving noise schedule over t = 1..T.
///
/// x_t = signal(t) * x_0 + noise(t) * eps with signal^2 + noise^2 = 1.
/// Index 0 denotes clean data (alphaBar = 1).
class NoiseSchedule {
 public:
  /// Throws ConfigError for steps < 1.
  static NoiseSchedule build(int steps, ScheduleKind kind = ScheduleKind::kCosine);

  int steps() const { return static_cast<int>(alphas_.size()); }
  ScheduleKind kind() const { return kind_; }

  /// Per-step retention alpha_t, t in [1, T].
  double alpha(int t) const;
  /// Cumulative product of alpha up to t; alphaBar(0) = 1.
  double alphaBar(int t) const;
  double signal(int t) const;
  double noise(int t) const;
  /// log(signal / noise); only defined for t >= 1.
  double logSnr(int t) const;

  /// Coefficients of the probability-flow ODE dx = [f x - g^2/2 * score] dt, per unit step.
  double drift(int t) const;
  double diffusionSquared(int t) const;

  /// log alphaBar at fractional t by linear interpolation between integer steps.
  double logAlphaBarAt(double t) const;

 private:
  ScheduleKind kind_ = ScheduleKind::kCosine;
  std::vector<double> alphas_;
  std::vector<double> alphaBars_;  // index 0 is t = 0
  void checkStep(int t, int lowest) const;
};

/// x_t = signal(t) x0 + noise(t) eps. Throws ShapeError on mismatched shapes.
Matrix qSample(const Matrix& x0, int t, const Matrix& noise, const NoiseSchedule& schedule);

/// Standard normal matrix.
Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// Data-prediction model: (x_t, t) -> estimate of x_0. Conditions are bound by the caller.
using DataPredictor = std::function<Matrix(const Matrix& xt, int t)>;

struct SamplerOptions {
  int steps = 25;
  int order = 2;
  /// Return the data prediction at the last grid point instead of the ODE state.
  bool denoiseFinal = true;
};

/// Decreasing grid T = t_0 > ... > t_K = 1, uniform in t, rounded and de-duplicated.
std::vector<int> timeGrid(int trainSteps, int steps);

/// Multistep exponential-integrator sampler in log-SNR space, starting from the
/// given x_{t_0}. Order 2 combines the two most recent data predictions; the first
/// step always uses order 1.
Matrix solveFrom(const Matrix& xStart, const DataPredictor& model, const NoiseSchedule& schedule,
                 const SamplerOptions& options);

/// Draws x_{t_0} ~ N(0, I) of the given shape and calls solveFrom.
Matrix sample(const DataPredictor& model, Eigen::Index rows, Eigen::Index cols, const NoiseSchedule& schedule,
              const SamplerOptions& options, std::mt19937_64& rng);

} // namespace promogen
