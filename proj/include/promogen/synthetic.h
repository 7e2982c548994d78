// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "promogen/motion.h"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace promogen {

/// Parameters of the procedural motion family.
struct SyntheticSpec {
  int count = 512;
  int frames = 64;
  double fps = kDefaultFps;
  std::uint64_t seed = 7;

  /// Planar Bezier path: first control point within +-startSpread, then
  /// segments of length in [minStep, maxStep] turning by at most maxTurn radians.
  int controlPoints = 4;
  double startSpread = 1.0;
  double minStep = 0.4;
  double maxStep = 1.2;
  double maxTurn = 0.8;

  /// Per-joint oscillation: amplitude uniform in [0, maxAmplitude] * amplitudeScale,
  /// shared cycle frequency uniform in [minFrequency, maxFrequency] Hz, random phase.
  double maxAmplitude = 0.5;
  double amplitudeScale = 1.0;
  double minFrequency = 0.6;
  double maxFrequency = 1.6;
  /// Static per-joint rotation uniform in [-styleAngle, styleAngle].
  double styleAngle = 0.2;

  /// Throws ConfigError.
  void validate() const;
};

/// Deterministic under spec.seed. Each sequence keeps the lowest foot on the
/// ground plane (y = 0) at every frame.
std::vector<MotionSequence> generateSynthetic(const SyntheticSpec& spec, const Skeleton& skeleton);

/// Writes `motion_00000.pmg`, ... into `dir` (created if missing).
void saveDataset(const std::filesystem::path& dir, const std::vector<MotionSequence>& motions, int joints);
/// Loads every `.pmg` file in `dir` in lexicographic order.
std::vector<MotionSequence> loadDataset(const std::filesystem::path& dir);

} // namespace promogen
