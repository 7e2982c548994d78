// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <vector>

namespace promogen {

/// Anchor-count curriculum: training is split into `stages` equal blocks of
/// epochs and the lower bound of the anchor count drops linearly from 20 to 1.
struct CurriculumConfig {
  int totalEpochs = 100;
  int stages = 4;
  int maxAnchors = 30;
  int frames = 64;
  /// Smallest interval elasticity drawn when feasible.
  int minGapFloor = 4;
  bool enabled = true;

  /// Throws ConfigError.
  void validate() const;
};

struct IterationParams {
  int count = 1;   // temporal density
  int minGap = 0;  // interval elasticity
  int stage = 1;
  /// minGap fell below `minGapFloor` (or count below the stage minimum) to stay feasible.
  bool clamped = false;
};

inline constexpr int kDenseMinAnchors = 20;

/// floor(20 - 19 (s - 1) / (stages - 1)); 20 at s = 1, 1 at s = stages.
int minAnchorsForStage(int stage, int stages);

/// ceil(epoch / (totalEpochs / stages)) clamped to [1, stages]; the last stage takes the remainder.
int stageOfEpoch(int epoch, const CurriculumConfig& config);

/// Per-stage minimum anchor counts for stages 1..stages.
std::vector<int> minAnchorSchedule(int stages);

/// Largest feasible interval elasticity for `count` anchors in `frames` frames, capped at floor(frames / count).
int maxMinGap(int frames, int count);

/// Draws (count, minGap) for one iteration in `stage`. With the curriculum disabled the
/// count is drawn over [1, maxAnchors]. The result always admits a valid placement.
IterationParams sampleIterationParams(int stage, const CurriculumConfig& config, std::mt19937_64& rng);

} // namespace promogen
