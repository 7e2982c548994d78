// SPDX-License-Identifier: Apache-2.0
#include "promogen/metrics.h"

#include "promogen/errors.h"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace promogen {

namespace {

void requireSameShape(const MotionSequence& a, const MotionSequence& b) {
  if (a.features.rows() != b.features.rows() || a.features.cols() != b.features.cols()) {
    throw ShapeError("generated and reference motions differ in shape");
  }
}

double meanJointDistance(const JointPositions& a, const JointPositions& b, std::span<const int> frames) {
  double total = 0.0;
  for (int f : frames) {
    for (Eigen::Index j = 0; j < a.joints(); ++j) {
      total += (a.at(f, j) - b.at(f, j)).norm();
    }
  }
  return total / (static_cast<double>(frames.size()) * static_cast<double>(a.joints()));
}

Matrix symmetricSqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix covariance(const Matrix& samples, const Eigen::RowVectorXd& mean) {
  const Matrix centered = samples.rowwise() - mean;
  Matrix cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  if (samples.rows() <= samples.cols()) {
    cov.diagonal().array() += 1e-6;
  }
  return cov;
}

nlohmann::json intervalJson(const Interval& i) {
  return {{"mean", i.mean}, {"lower", i.lower}, {"upper", i.upper}};
}

} // namespace

double mpjpe(const MotionSequence& generated, const MotionSequence& truth, const Skeleton& skeleton) {
  requireSameShape(generated, truth);
  std::vector<int> frames(static_cast<std::size_t>(generated.frameCount()));
  for (std::size_t f = 0; f < frames.size(); ++f) {
    frames[f] = static_cast<int>(f);
  }
  if (frames.empty()) {
    throw UndefinedMetric("mpjpe of an empty motion");
  }
  return meanJointDistance(jointWorldPositions(generated, skeleton), jointWorldPositions(truth, skeleton), frames);
}

double kMpjpe(const MotionSequence& generated, const MotionSequence& truth, const Skeleton& skeleton,
              std::span<const int> positions) {
  requireSameShape(generated, truth);
  if (positions.empty()) {
    throw UndefinedMetric("k-mpjpe without anchor frames");
  }
  checkAnchorPositions(positions, generated.frameCount());
  return meanJointDistance(jointWorldPositions(generated, skeleton), jointWorldPositions(truth, skeleton), positions);
}

double jointSmoothness(const MotionSequence& generated, const Skeleton& skeleton) {
  const Eigen::Index n = generated.frameCount();
  if (n < 3) {
    throw UndefinedMetric("joint smoothness needs at least three frames");
  }
  const JointPositions p = jointWorldPositions(generated, skeleton);
  double total = 0.0;
  for (Eigen::Index f = 1; f + 1 < n; ++f) {
    for (Eigen::Index j = 0; j < p.joints(); ++j) {
      total += (p.at(f + 1, j) - 2.0 * p.at(f, j) + p.at(f - 1, j)).norm();
    }
  }
  return total / (static_cast<double>(n - 2) * static_cast<double>(p.joints()));
}

double diversity(std::span<const MotionSequence> motions, int pairs, std::mt19937_64& rng) {
  if (motions.size() < 2) {
    throw UndefinedMetric("diversity needs at least two motions");
  }
  if (pairs < 1) {
    throw ConfigError("diversity needs at least one pair");
  }
  std::vector<Eigen::RowVectorXd> pooled;
  pooled.reserve(motions.size());
  for (const MotionSequence& m : motions) {
    pooled.push_back(m.features.colwise().mean());
  }
  const int count = static_cast<int>(motions.size());
  std::uniform_int_distribution<int> first(0, count - 1);
  std::uniform_int_distribution<int> other(0, count - 2);
  double total = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const int i = first(rng);
    int j = other(rng);
    if (j >= i) {
      ++j;
    }
    total += (pooled[i] - pooled[j]).norm();
  }
  return total / pairs;
}

double directionalConsistency(const MotionSequence& generated, const Trajectory& reference, double threshold) {
  const Trajectory gen = extractTrajectory(generated);
  if (gen.frameCount() != reference.frameCount()) {
    throw ShapeError("trajectory lengths differ");
  }
  double total = 0.0;
  int used = 0;
  for (Eigen::Index f = 1; f < gen.frameCount(); ++f) {
    const Eigen::RowVector3d a = gen.positions.row(f) - gen.positions.row(f - 1);
    const Eigen::RowVector3d b = reference.positions.row(f) - reference.positions.row(f - 1);
    const double na = a.norm();
    const double nb = b.norm();
    if (na > threshold && nb > threshold) {
      total += a.dot(b) / (na * nb);
      ++used;
    }
  }
  if (used == 0) {
    throw UndefinedMetric("no frame with non-negligible displacement");
  }
  return total / used;
}

double frechetDistance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("feature sets differ in width");
  }
  if (a.rows() < 2 || b.rows() < 2) {
    throw UndefinedMetric("Frechet distance needs at least two samples per set");
  }
  const Eigen::RowVectorXd muA = a.colwise().mean();
  const Eigen::RowVectorXd muB = b.colwise().mean();
  const Matrix covA = covariance(a, muA);
  const Matrix covB = covariance(b, muB);
  const Matrix rootA = symmetricSqrt(covA);
  const Matrix middle = rootA * covB * rootA;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (middle + middle.transpose()), Eigen::EigenvaluesOnly);
  const double crossTrace = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return (muA - muB).squaredNorm() + covA.trace() + covB.trace() - 2.0 * crossTrace;
}

FidFeatures::FidFeatures(int featureDim, int dims, std::uint64_t seed) {
  if (featureDim < 1 || dims < 1) {
    throw ConfigError("FID projection dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(2.0 * featureDim));
  projection_.resize(2 * featureDim, dims);
  for (Eigen::Index c = 0; c < projection_.cols(); ++c) {
    for (Eigen::Index r = 0; r < projection_.rows(); ++r) {
      projection_(r, c) = dist(rng);
    }
  }
}

Eigen::RowVectorXd FidFeatures::embed(const MotionSequence& motion) const {
  const Matrix& x = motion.features;
  if (2 * x.cols() != projection_.rows()) {
    throw ShapeError("motion width does not match the FID projection");
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd var = (x.rowwise() - mean).array().square().colwise().mean();
  Eigen::RowVectorXd pooled(2 * x.cols());
  pooled << mean, var.cwiseSqrt();
  return pooled * projection_;
}

Matrix FidFeatures::embed(std::span<const MotionSequence> motions) const {
  Matrix out(static_cast<Eigen::Index>(motions.size()), projection_.cols());
  for (std::size_t i = 0; i < motions.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = embed(motions[i]);
  }
  return out;
}

double fid(std::span<const MotionSequence> generated, std::span<const MotionSequence> real, const FidFeatures& features) {
  return frechetDistance(features.embed(generated), features.embed(real));
}

Interval bootstrapInterval(std::span<const double> values, std::mt19937_64& rng, int resamples, double level) {
  if (values.empty()) {
    throw UndefinedMetric("bootstrap of an empty sample");
  }
  const std::size_t n = values.size();
  Interval out;
  for (double v : values) {
    out.mean += v;
  }
  out.mean /= static_cast<double>(n);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (int r = 0; r < resamples; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += values[pick(rng)];
    }
    means.push_back(s / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());
  const double tail = 0.5 * (1.0 - level);
  const auto index = [&](double q) {
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(means.size() - 1)));
    return means[std::min(k, means.size() - 1)];
  };
  out.lower = index(tail);
  out.upper = index(1.0 - tail);
  return out;
}

std::string MetricsReport::toJson(int indent) const {
  nlohmann::json j;
  j["mpjpe"] = intervalJson(mpjpe);
  j["k_mpjpe"] = intervalJson(kMpjpe);
  j["js"] = intervalJson(js);
  j["dm"] = intervalJson(dm);
  j["diversity"] = diversity;
  j["fid"] = fid;
  j["samples"] = samples;
  j["dm_undefined"] = dmUndefined;
  j["anchor_counts"] = anchorCounts;
  j["seed"] = seed;
  return j.dump(indent);
}

} // namespace promogen
