// SPDX-License-Identifier: Apache-2.0
#include "promogen/diffusion.h"

#include "promogen/errors.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace promogen {

namespace {

constexpr double kMaxBeta = 0.999;
constexpr double kCosineOffset = 0.008;

double cosineBar(double t, double steps) {
  const double c = std::cos(((t / steps + kCosineOffset) / (1.0 + kCosineOffset)) * std::numbers::pi / 2.0);
  return c * c;
}

void checkShape(const Matrix& got, const Matrix& want, const char* what) {
  if (got.rows() != want.rows() || got.cols() != want.cols()) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(want.rows()) + "x" +
                     std::to_string(want.cols()) + ", got " + std::to_string(got.rows()) + "x" +
                     std::to_string(got.cols()));
  }
}

} // namespace

ScheduleKind parseScheduleKind(const std::string& name) {
  if (name == "cosine") {
    return ScheduleKind::kCosine;
  }
  if (name == "linear") {
    return ScheduleKind::kLinear;
  }
  throw ConfigError("unknown noise schedule '" + name + "'");
}

std::string toString(ScheduleKind kind) {
  return kind == ScheduleKind::kCosine ? "cosine" : "linear";
}

NoiseSchedule NoiseSchedule::build(int steps, ScheduleKind kind) {
  if (steps < 1) {
    throw ConfigError("noise schedule needs at least one step");
  }
  NoiseSchedule s;
  s.kind_ = kind;
  s.alphas_.resize(static_cast<std::size_t>(steps));
  const double T = steps;
  if (kind == ScheduleKind::kCosine) {
    for (int t = 1; t <= steps; ++t) {
      const double beta = 1.0 - cosineBar(t, T) / cosineBar(t - 1, T);
      s.alphas_[t - 1] = 1.0 - std::min(beta, kMaxBeta);
    }
  } else {
    const double scale = 1000.0 / T;
    const double lo = scale * 1e-4;
    const double hi = scale * 0.02;
    for (int t = 1; t <= steps; ++t) {
      const double beta = steps == 1 ? lo : lo + (hi - lo) * (t - 1) / (T - 1);
      s.alphas_[t - 1] = 1.0 - std::min(beta, kMaxBeta);
    }
  }
  s.alphaBars_.resize(static_cast<std::size_t>(steps) + 1);
  // Accumulate in log space so alphaBar near 1 keeps its precision.
  double logBar = 0.0;
  s.alphaBars_[0] = 1.0;
  for (int t = 1; t <= steps; ++t) {
    logBar += std::log(s.alphas_[t - 1]);
    s.alphaBars_[t] = std::exp(logBar);
  }
  return s;
}

void NoiseSchedule::checkStep(int t, int lowest) const {
  if (t < lowest || t > steps()) {
    throw Error("timestep " + std::to_string(t) + " outside [" + std::to_string(lowest) + ", " +
                std::to_string(steps()) + "]");
  }
}

double NoiseSchedule::alpha(int t) const {
  checkStep(t, 1);
  return alphas_[t - 1];
}

double NoiseSchedule::alphaBar(int t) const {
  checkStep(t, 0);
  return alphaBars_[t];
}

double NoiseSchedule::signal(int t) const {
  return std::sqrt(alphaBar(t));
}

double NoiseSchedule::noise(int t) const {
  checkStep(t, 0);
  return std::sqrt(-std::expm1(std::log(alphaBars_[t])));
}

double NoiseSchedule::logSnr(int t) const {
  checkStep(t, 1);
  return std::log(signal(t)) - std::log(noise(t));
}

double NoiseSchedule::drift(int t) const {
  return 0.5 * std::log(alpha(t));
}

double NoiseSchedule::diffusionSquared(int t) const {
  return -std::log(alpha(t));
}

double NoiseSchedule::logAlphaBarAt(double t) const {
  if (!(t >= 0.0) || t > steps()) {
    throw Error("fractional timestep outside [0, T]");
  }
  const int lo = static_cast<int>(std::floor(t));
  if (lo >= steps()) {
    return std::log(alphaBars_.back());
  }
  const double w = t - lo;
  return (1.0 - w) * std::log(alphaBars_[lo]) + w * std::log(alphaBars_[lo + 1]);
}

Matrix qSample(const Matrix& x0, int t, const Matrix& noise, const NoiseSchedule& schedule) {
  checkShape(noise, x0, "qSample noise");
  return schedule.signal(t) * x0 + schedule.noise(t) * noise;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      m(r, c) = dist(rng);
    }
  }
  return m;
}

std::vector<int> timeGrid(int trainSteps, int steps) {
  if (steps < 1) {
    throw ConfigError("sampler needs at least one step");
  }
  std::vector<int> grid;
  for (int i = 0; i <= steps; ++i) {
    const double t = trainSteps * (1.0 - static_cast<double>(i) / steps);
    const int rounded = std::max(1, static_cast<int>(std::lround(t)));
    if (grid.empty() || rounded < grid.back()) {
      grid.push_back(rounded);
    }
  }
  return grid;
}

Matrix solveFrom(const Matrix& xStart, const DataPredictor& model, const NoiseSchedule& schedule,
                 const SamplerOptions& options) {
  if (options.order != 1 && options.order != 2) {
    throw ConfigError("sampler order must be 1 or 2");
  }
  const std::vector<int> grid = timeGrid(schedule.steps(), options.steps);
  Matrix x = xStart;
  Matrix previous;
  double previousH = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const int from = grid[i - 1];
    const int to = grid[i];
    Matrix current = model(x, from);
    checkShape(current, x, "denoiser output");
    const double h = schedule.logSnr(to) - schedule.logSnr(from);
    Matrix blended;
    if (options.order == 2 && previous.size() != 0) {
      const double r = previousH / h;
      blended = (1.0 + 0.5 / r) * current - (0.5 / r) * previous;
    } else {
      blended = current;
    }
    x = (schedule.noise(to) / schedule.noise(from)) * x - schedule.signal(to) * std::expm1(-h) * blended;
    previous = std::move(current);
    previousH = h;
  }
  if (options.denoiseFinal) {
    Matrix out = model(x, grid.back());
    checkShape(out, x, "denoiser output");
    return out;
  }
  return x;
}

Matrix sample(const DataPredictor& model, Eigen::Index rows, Eigen::Index cols, const NoiseSchedule& schedule,
              const SamplerOptions& options, std::mt19937_64& rng) {
  return solveFrom(gaussian(rows, cols, rng), model, schedule, options);
}

} // namespace promogen
