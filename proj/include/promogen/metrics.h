// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "promogen/motion.h"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace promogen {

/// Mean per-joint Euclidean distance of world positions, meters.
double mpjpe(const MotionSequence& generated, const MotionSequence& truth, const Skeleton& skeleton);

/// mpjpe restricted to the listed frames. Throws UndefinedMetric for an empty list.
double kMpjpe(const MotionSequence& generated, const MotionSequence& truth, const Skeleton& skeleton,
              std::span<const int> positions);

/// Mean norm of the second difference of world joint positions over interior frames.
/// Throws UndefinedMetric for fewer than three frames.
double jointSmoothness(const MotionSequence& generated, const Skeleton& skeleton);

/// Mean Euclidean distance between `pairs` random pairs of distinct motions,
/// each represented by its frame-averaged feature vector.
double diversity(std::span<const MotionSequence> motions, int pairs, std::mt19937_64& rng);

/// Mean cosine between per-frame pelvis displacements of `generated` and `reference`,
/// over frames where both displacements exceed `threshold`.
double directionalConsistency(const MotionSequence& generated, const Trajectory& reference, double threshold = 1e-6);

/// Frechet distance between Gaussian fits of two row-sample sets.
double frechetDistance(const Matrix& a, const Matrix& b);

/// Fixed random projection of [mean | std] pooled motion features.
class FidFeatures {
 public:
  FidFeatures(int featureDim, int dims = 32, std::uint64_t seed = 0x5eed);

  Eigen::RowVectorXd embed(const MotionSequence& motion) const;
  Matrix embed(std::span<const MotionSequence> motions) const;
  int dims() const { return static_cast<int>(projection_.cols()); }

 private:
  Matrix projection_;
};

double fid(std::span<const MotionSequence> generated, std::span<const MotionSequence> real, const FidFeatures& features);

struct Interval {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Percentile bootstrap interval of the mean.
Interval bootstrapInterval(std::span<const double> values, std::mt19937_64& rng, int resamples = 1000,
                           double level = 0.95);

struct MetricsReport {
  Interval mpjpe;
  Interval kMpjpe;
  Interval js;
  Interval dm;
  double diversity = 0.0;
  double fid = 0.0;
  int samples = 0;
  int dmUndefined = 0;
  std::vector<int> anchorCounts;
  std::uint64_t seed = 0;

  std::string toJson(int indent = 2) const;
};

} // namespace promogen
