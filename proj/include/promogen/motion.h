// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace promogen {

using Matrix = Eigen::MatrixXd;
using Vector3 = Eigen::Vector3d;

inline constexpr double kDefaultFps = 20.0;
inline constexpr int kPelvisColumns = 3;

/// Kinematic tree of the character. Joint 0 is the root (pelvis).
class Skeleton {
 public:
  /// Throws Error if the tree is malformed (multiple roots, cycles, bad foot indices).
  Skeleton(std::vector<int> parents, std::vector<Vector3> restOffsets, std::vector<int> footJoints);

  /// 22-joint HumanML3D-style layout, y up, meters. Feet are joints 10 and 11.
  static Skeleton humanml22();

  int jointCount() const { return static_cast<int>(parents_.size()); }
  int root() const { return root_; }
  int parent(int joint) const { return parents_[joint]; }
  const std::vector<int>& parents() const { return parents_; }
  const std::vector<Vector3>& restOffsets() const { return restOffsets_; }
  const std::vector<int>& footJoints() const { return footJoints_; }

  /// Width of a motion feature row for this skeleton: 3 + 3 * (J - 1).
  int featureDim() const { return kPelvisColumns + 3 * (jointCount() - 1); }
  int anchorDim() const { return featureDim() - kPelvisColumns; }

  /// Feature column holding coordinate `axis` of joint `joint` (pelvis-relative for non-root).
  int column(int joint, int axis) const;

 private:
  std::vector<int> parents_;
  std::vector<Vector3> restOffsets_;
  std::vector<int> footJoints_;
  int root_ = 0;
};

/// N frames of motion features. Column layout is
/// [pelvis world x,y,z | pelvis-relative offsets of joints 1..J-1, 3 each].
struct MotionSequence {
  Matrix features;
  double fps = kDefaultFps;

  Eigen::Index frameCount() const { return features.rows(); }
  Eigen::Index featureDim() const { return features.cols(); }
};

/// Global pelvis position per frame, N x 3.
struct Trajectory {
  Matrix positions;

  Eigen::Index frameCount() const { return positions.rows(); }
};

/// Displacement-free anchor poses pinned at strictly increasing frame indices.
class AnchorSet {
 public:
  AnchorSet() = default;
  /// Throws InvalidAnchorPositions unless positions are strictly increasing and non-negative,
  /// ShapeError if poses has a row count different from positions.
  AnchorSet(std::vector<int> positions, Matrix poses);

  /// Sorts (position, pose) pairs by position first. Duplicates are rejected.
  static AnchorSet fromUnsorted(std::span<const int> positions, const Matrix& poses);

  const std::vector<int>& positions() const { return positions_; }
  const Matrix& poses() const { return poses_; }
  int size() const { return static_cast<int>(positions_.size()); }
  bool empty() const { return positions_.empty(); }

 private:
  std::vector<int> positions_;
  Matrix poses_;
};

/// World positions of every joint, stored N x 3J with joint j in columns [3j, 3j+3).
struct JointPositions {
  Matrix data;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index joints() const { return data.cols() / 3; }
  Vector3 at(Eigen::Index frame, Eigen::Index joint) const {
    return data.block<1, 3>(frame, 3 * joint).transpose();
  }
};

enum class ValidationStatus { kOk, kNonFinite, kTooShort, kBadWidth };

const char* toString(ValidationStatus status);

Trajectory extractTrajectory(const MotionSequence& motion);

/// Copies `trajectory` into the pelvis columns of `motion`.
MotionSequence withTrajectory(const MotionSequence& motion, const Trajectory& trajectory);

AnchorSet gatherAnchors(const MotionSequence& motion, std::span<const int> positions);

JointPositions jointWorldPositions(const MotionSequence& motion, const Skeleton& skeleton);

/// Inverse of jointWorldPositions: builds canonical features from N x 3J world positions.
MotionSequence fromJointPositions(const JointPositions& joints, double fps = kDefaultFps);

/// `featureDim` of 0 skips the width check.
ValidationStatus validate(const MotionSequence& motion, int featureDim = 0);

/// Throws ShapeError / Error with the offending status.
void requireValid(const MotionSequence& motion, int featureDim = 0);

/// Throws InvalidAnchorPositions unless `positions` is strictly increasing inside [0, frames).
void checkAnchorPositions(std::span<const int> positions, Eigen::Index frames);

// .pmg container: one JSON header line, then frames * feature_dim little-endian float32.
void writePmg(const std::filesystem::path& path, const MotionSequence& motion, int joints);
MotionSequence readPmg(const std::filesystem::path& path);

/// CSV with header `frame,x,y,z`.
void writeTrajectoryCsv(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory readTrajectoryCsv(const std::filesystem::path& path);

} // namespace promogen
