// SPDX-License-Identifier: Apache-2.0
#include "promogen/motion.h"

#include "promogen/errors.h"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace promogen {

namespace {

static_assert(std::endian::native == std::endian::little, ".pmg I/O assumes a little-endian host");

} // namespace

Skeleton::Skeleton(std::vector<int> parents, std::vector<Vector3> restOffsets, std::vector<int> footJoints)
    : parents_(std::move(parents)), restOffsets_(std::move(restOffsets)), footJoints_(std::move(footJoints)) {
  const int n = jointCount();
  if (n < 1) {
    throw Error("skeleton needs at least one joint");
  }
  if (static_cast<int>(restOffsets_.size()) != n) {
    throw Error("skeleton rest offsets do not match joint count");
  }
  int roots = 0;
  for (int j = 0; j < n; ++j) {
    if (parents_[j] < 0) {
      ++roots;
      root_ = j;
    } else if (parents_[j] >= n) {
      throw Error("skeleton parent index out of range");
    }
    if (!restOffsets_[j].allFinite()) {
      throw Error("skeleton rest offset is not finite");
    }
  }
  if (roots != 1) {
    throw Error("skeleton must have exactly one root");
  }
  if (root_ != 0) {
    throw Error("skeleton root must be joint 0");
  }
  // Every chain must reach the root within n hops.
  for (int j = 0; j < n; ++j) {
    int cur = j;
    for (int hops = 0; cur >= 0; ++hops) {
      if (hops > n) {
        throw Error("skeleton parent graph has a cycle");
      }
      cur = parents_[cur];
    }
  }
  for (int f : footJoints_) {
    if (f < 0 || f >= n) {
      throw Error("foot joint index out of range");
    }
  }
}

Skeleton Skeleton::humanml22() {
  std::vector<int> parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
  std::vector<Vector3> offsets = {
      {0.0, 0.0, 0.0},    // pelvis
      {0.1, -0.05, 0.0},  // left hip
      {-0.1, -0.05, 0.0}, // right hip
      {0.0, 0.1, 0.0},    // spine1
      {0.0, -0.4, 0.0},   // left knee
      {0.0, -0.4, 0.0},   // right knee
      {0.0, 0.13, 0.0},   // spine2
      {0.0, -0.4, 0.0},   // left ankle
      {0.0, -0.4, 0.0},   // right ankle
      {0.0, 0.05, 0.0},   // spine3
      {0.0, -0.05, 0.12}, // left foot
      {0.0, -0.05, 0.12}, // right foot
      {0.0, 0.2, 0.0},    // neck
      {0.08, 0.12, 0.0},  // left collar
      {-0.08, 0.12, 0.0}, // right collar
      {0.0, 0.1, 0.0},    // head
      {0.1, 0.0, 0.0},    // left shoulder
      {-0.1, 0.0, 0.0},   // right shoulder
      {0.0, -0.27, 0.0},  // left elbow
      {0.0, -0.27, 0.0},  // right elbow
      {0.0, -0.25, 0.0},  // left wrist
      {0.0, -0.25, 0.0},  // right wrist
  };
  return Skeleton(std::move(parents), std::move(offsets), {10, 11});
}

int Skeleton::column(int joint, int axis) const {
  return joint == root_ ? axis : kPelvisColumns + 3 * (joint - 1) + axis;
}

AnchorSet::AnchorSet(std::vector<int> positions, Matrix poses) : positions_(std::move(positions)), poses_(std::move(poses)) {
  if (static_cast<Eigen::Index>(positions_.size()) != poses_.rows()) {
    throw ShapeError("anchor pose rows do not match anchor count");
  }
  for (std::size_t k = 0; k < positions_.size(); ++k) {
    if (positions_[k] < 0 || (k > 0 && positions_[k] <= positions_[k - 1])) {
      throw InvalidAnchorPositions("anchor positions must be non-negative and strictly increasing");
    }
  }
}

AnchorSet AnchorSet::fromUnsorted(std::span<const int> positions, const Matrix& poses) {
  if (static_cast<Eigen::Index>(positions.size()) != poses.rows()) {
    throw ShapeError("anchor pose rows do not match anchor count");
  }
  std::vector<int> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return positions[a] < positions[b]; });
  std::vector<int> sorted(positions.size());
  Matrix sortedPoses(poses.rows(), poses.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted[k] = positions[order[k]];
    sortedPoses.row(static_cast<Eigen::Index>(k)) = poses.row(order[k]);
  }
  return AnchorSet(std::move(sorted), std::move(sortedPoses));
}

const char* toString(ValidationStatus status) {
  switch (status) {
    case ValidationStatus::kOk:
      return "ok";
    case ValidationStatus::kNonFinite:
      return "NonFinite";
    case ValidationStatus::kTooShort:
      return "TooShort";
    case ValidationStatus::kBadWidth:
      return "BadWidth";
  }
  return "unknown";
}

Trajectory extractTrajectory(const MotionSequence& motion) {
  return Trajectory{motion.features.leftCols(kPelvisColumns)};
}

MotionSequence withTrajectory(const MotionSequence& motion, const Trajectory& trajectory) {
  if (trajectory.frameCount() != motion.frameCount() || trajectory.positions.cols() != 3) {
    throw ShapeError("trajectory does not match motion length");
  }
  MotionSequence out = motion;
  out.features.leftCols(kPelvisColumns) = trajectory.positions;
  return out;
}

void checkAnchorPositions(std::span<const int> positions, Eigen::Index frames) {
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (positions[k] < 0 || positions[k] >= frames) {
      throw InvalidAnchorPositions("anchor position " + std::to_string(positions[k]) + " outside [0, " +
                                   std::to_string(frames) + ")");
    }
    if (k > 0 && positions[k] <= positions[k - 1]) {
      throw InvalidAnchorPositions("anchor positions must be strictly increasing");
    }
  }
}

AnchorSet gatherAnchors(const MotionSequence& motion, std::span<const int> positions) {
  checkAnchorPositions(positions, motion.frameCount());
  const Eigen::Index width = motion.featureDim() - kPelvisColumns;
  Matrix poses(static_cast<Eigen::Index>(positions.size()), width);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    poses.row(static_cast<Eigen::Index>(k)) = motion.features.row(positions[k]).tail(width);
  }
  return AnchorSet(std::vector<int>(positions.begin(), positions.end()), std::move(poses));
}

JointPositions jointWorldPositions(const MotionSequence& motion, const Skeleton& skeleton) {
  if (motion.featureDim() != skeleton.featureDim()) {
    throw ShapeError("motion width " + std::to_string(motion.featureDim()) + " does not match skeleton width " +
                     std::to_string(skeleton.featureDim()));
  }
  const Eigen::Index n = motion.frameCount();
  const int joints = skeleton.jointCount();
  JointPositions out{Matrix(n, 3 * joints)};
  const auto pelvis = motion.features.leftCols(kPelvisColumns);
  out.data.leftCols(3) = pelvis;
  for (int j = 1; j < joints; ++j) {
    out.data.middleCols(3 * j, 3) = pelvis + motion.features.middleCols(skeleton.column(j, 0), 3);
  }
  return out;
}

MotionSequence fromJointPositions(const JointPositions& joints, double fps) {
  const Eigen::Index n = joints.frames();
  const Eigen::Index count = joints.joints();
  if (joints.data.cols() != 3 * count || count < 1) {
    throw ShapeError("joint position matrix must have 3 columns per joint");
  }
  MotionSequence out{Matrix(n, kPelvisColumns + 3 * (count - 1)), fps};
  const auto pelvis = joints.data.leftCols(3);
  out.features.leftCols(3) = pelvis;
  for (Eigen::Index j = 1; j < count; ++j) {
    out.features.middleCols(kPelvisColumns + 3 * (j - 1), 3) = joints.data.middleCols(3 * j, 3) - pelvis;
  }
  return out;
}

ValidationStatus validate(const MotionSequence& motion, int featureDim) {
  if (motion.frameCount() < 2) {
    return ValidationStatus::kTooShort;
  }
  const Eigen::Index width = motion.featureDim();
  if (width < kPelvisColumns || (width - kPelvisColumns) % 3 != 0 || (featureDim > 0 && width != featureDim)) {
    return ValidationStatus::kBadWidth;
  }
  if (!motion.features.allFinite() || !std::isfinite(motion.fps) || motion.fps <= 0.0) {
    return ValidationStatus::kNonFinite;
  }
  return ValidationStatus::kOk;
}

void requireValid(const MotionSequence& motion, int featureDim) {
  const ValidationStatus status = validate(motion, featureDim);
  if (status == ValidationStatus::kBadWidth) {
    throw ShapeError("invalid motion: BadWidth");
  }
  if (status != ValidationStatus::kOk) {
    throw Error(std::string("invalid motion: ") + toString(status));
  }
}

void writePmg(const std::filesystem::path& path, const MotionSequence& motion, int joints) {
  nlohmann::json header = {{"version", 1},
                           {"fps", motion.fps},
                           {"joints", joints},
                           {"feature_dim", motion.featureDim()},
                           {"frames", motion.frameCount()}};
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  out << header.dump() << '\n';
  std::vector<float> blob(static_cast<std::size_t>(motion.features.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < motion.frameCount(); ++r) {
    for (Eigen::Index c = 0; c < motion.featureDim(); ++c) {
      blob[k++] = static_cast<float>(motion.features(r, c));
    }
  }
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!out) {
    throw Error("failed writing " + path.string());
  }
}

MotionSequence readPmg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError(path.string() + ": missing header line");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  if (header.value("version", 0) != 1) {
    throw VersionError(path.string() + ": unsupported .pmg version");
  }
  const auto frames = header.at("frames").get<Eigen::Index>();
  const auto width = header.at("feature_dim").get<Eigen::Index>();
  if (frames < 0 || width < 0) {
    throw FormatError(path.string() + ": negative dimensions");
  }
  std::vector<float> blob(static_cast<std::size_t>(frames * width));
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(blob.size() * sizeof(float))) {
    throw FormatError(path.string() + ": truncated payload");
  }
  MotionSequence motion{Matrix(frames, width), header.value("fps", kDefaultFps)};
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < frames; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      motion.features(r, c) = blob[k++];
    }
  }
  return motion;
}

void writeTrajectoryCsv(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  out << "frame,x,y,z\n";
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index f = 0; f < trajectory.frameCount(); ++f) {
    out << f << ',' << trajectory.positions(f, 0) << ',' << trajectory.positions(f, 1) << ','
        << trajectory.positions(f, 2) << '\n';
  }
}

Trajectory readTrajectoryCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line.rfind("frame,x,y,z", 0) != 0) {
    throw FormatError(path.string() + ": expected header frame,x,y,z");
  }
  std::vector<Vector3> rows;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    long frame = 0;
    Vector3 p;
    if (!(fields >> frame >> p.x() >> p.y() >> p.z())) {
      throw FormatError(path.string() + ": malformed row '" + line + "'");
    }
    if (frame != static_cast<long>(rows.size())) {
      throw FormatError(path.string() + ": frames must be consecutive from 0");
    }
    rows.push_back(p);
  }
  Trajectory out{Matrix(static_cast<Eigen::Index>(rows.size()), 3)};
  for (std::size_t f = 0; f < rows.size(); ++f) {
    out.positions.row(static_cast<Eigen::Index>(f)) = rows[f].transpose();
  }
  return out;
}

} // namespace promogen
