// SPDX-License-Identifier: Apache-2.0
#include "promogen/synthetic.h"

#include "promogen/errors.h"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace promogen {

namespace {

using Rotation = Eigen::Matrix3d;

struct JointMotion {
  Vector3 axis;
  double amplitude = 0.0;
  double phase = 0.0;
  double style = 0.0;
};

Vector3 randomAxis(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector3 v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-9) {
    v = Vector3(n(rng), n(rng), n(rng));
  }
  return v.normalized();
}

std::vector<Eigen::Vector2d> controlPath(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> start(-spec.startSpread, spec.startSpread);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> turn(-spec.maxTurn, spec.maxTurn);
  std::uniform_real_distribution<double> step(spec.minStep, spec.maxStep);
  std::vector<Eigen::Vector2d> points;
  points.emplace_back(start(rng), start(rng));
  double angle = heading(rng);
  for (int k = 1; k < spec.controlPoints; ++k) {
    angle += turn(rng);
    const double len = step(rng);
    points.push_back(points.back() + len * Eigen::Vector2d(std::cos(angle), std::sin(angle)));
  }
  return points;
}

// De Casteljau evaluation of the Bezier curve at s in [0, 1].
Eigen::Vector2d bezier(std::vector<Eigen::Vector2d> points, double s) {
  for (std::size_t level = points.size(); level > 1; --level) {
    for (std::size_t i = 0; i + 1 < level; ++i) {
      points[i] = (1.0 - s) * points[i] + s * points[i + 1];
    }
  }
  return points.front();
}

MotionSequence generateOne(const SyntheticSpec& spec, const Skeleton& skeleton, std::mt19937_64& rng) {
  const int joints = skeleton.jointCount();
  const int n = spec.frames;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> signedUnit(-1.0, 1.0);

  const std::vector<Eigen::Vector2d> path = controlPath(spec, rng);
  const double yaw = std::numbers::pi * signedUnit(rng);
  const double frequency = spec.minFrequency + (spec.maxFrequency - spec.minFrequency) * unit(rng);

  std::vector<JointMotion> motion(static_cast<std::size_t>(joints));
  for (int j = 0; j < joints; ++j) {
    if (j == skeleton.root()) {
      continue;
    }
    JointMotion& m = motion[static_cast<std::size_t>(j)];
    m.axis = randomAxis(rng);
    m.amplitude = spec.maxAmplitude * spec.amplitudeScale * unit(rng);
    m.phase = 2.0 * std::numbers::pi * unit(rng);
    m.style = spec.styleAngle * signedUnit(rng);
  }

  const Rotation rootRotation = Eigen::AngleAxisd(yaw, Vector3::UnitY()).toRotationMatrix();
  JointPositions positions{Matrix(n, 3 * joints)};
  std::vector<Rotation> global(static_cast<std::size_t>(joints));
  std::vector<Vector3> world(static_cast<std::size_t>(joints));
  for (int f = 0; f < n; ++f) {
    const double time = f / spec.fps;
    for (int j = 0; j < joints; ++j) {
      if (j == skeleton.root()) {
        global[j] = rootRotation;
        world[j] = Vector3::Zero();
        continue;
      }
      const JointMotion& m = motion[static_cast<std::size_t>(j)];
      const double angle = m.style + m.amplitude * std::sin(2.0 * std::numbers::pi * frequency * time + m.phase);
      const int p = skeleton.parent(j);
      world[j] = world[p] + global[p] * skeleton.restOffsets()[j];
      global[j] = global[p] * Eigen::AngleAxisd(angle, m.axis).toRotationMatrix();
    }
    double lowestFoot = world[skeleton.footJoints().front()].y();
    for (int foot : skeleton.footJoints()) {
      lowestFoot = std::min(lowestFoot, world[foot].y());
    }
    const double s = n == 1 ? 0.0 : static_cast<double>(f) / (n - 1);
    const Eigen::Vector2d planar = bezier(path, s);
    const Vector3 pelvis(planar.x(), -lowestFoot, planar.y());
    for (int j = 0; j < joints; ++j) {
      positions.data.block<1, 3>(f, 3 * j) = (pelvis + world[j]).transpose();
    }
  }
  return fromJointPositions(positions, spec.fps);
}

} // namespace

void SyntheticSpec::validate() const {
  if (count < 1 || frames < 1 || controlPoints < 2) {
    throw ConfigError("synthetic spec needs positive count/frames and at least two control points");
  }
  if (!(fps > 0.0) || !(minStep >= 0.0) || !(maxStep >= minStep) || !(maxTurn >= 0.0) || !(startSpread >= 0.0)) {
    throw ConfigError("synthetic path parameters out of range");
  }
  if (!(maxAmplitude >= 0.0) || !(amplitudeScale >= 0.0) || !(minFrequency >= 0.0) ||
      !(maxFrequency >= minFrequency) || !(styleAngle >= 0.0)) {
    throw ConfigError("synthetic oscillation parameters out of range");
  }
}

std::vector<MotionSequence> generateSynthetic(const SyntheticSpec& spec, const Skeleton& skeleton) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<MotionSequence> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    out.push_back(generateOne(spec, skeleton, rng));
  }
  return out;
}

void saveDataset(const std::filesystem::path& dir, const std::vector<MotionSequence>& motions, int joints) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < motions.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "motion_%05zu.pmg", i);
    writePmg(dir / name, motions[i], joints);
  }
}

std::vector<MotionSequence> loadDataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("dataset directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pmg") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<MotionSequence> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    out.push_back(readPmg(f));
  }
  if (out.empty()) {
    throw Error("no .pmg files in " + dir.string());
  }
  return out;
}

} // namespace promogen
