// SPDX-License-Identifier: Apache-2.0
#include "promogen/curriculum.h"

#include "promogen/errors.h"

#include <algorithm>
#include <string>

namespace promogen {

void CurriculumConfig::validate() const {
  if (stages < 1) {
    throw ConfigError("curriculum needs at least one stage");
  }
  if (totalEpochs < stages) {
    throw ConfigError("total epochs (" + std::to_string(totalEpochs) + ") smaller than stage count (" +
                      std::to_string(stages) + ")");
  }
  if (maxAnchors < 1) {
    throw ConfigError("maxAnchors must be >= 1");
  }
  if (frames < 1) {
    throw ConfigError("frames must be >= 1");
  }
  if (minGapFloor < 0) {
    throw ConfigError("minGapFloor must be >= 0");
  }
}

int minAnchorsForStage(int stage, int stages) {
  if (stages < 1 || stage < 1 || stage > stages) {
    throw InvalidStage("stage " + std::to_string(stage) + " outside [1, " + std::to_string(stages) + "]");
  }
  if (stage == 1) {
    return kDenseMinAnchors;
  }
  if (stage == stages) {
    return 1;
  }
  // Integer form of floor(20 - 19 (s - 1) / (E - 1)); the numerator is positive here.
  const int span = stages - 1;
  return (kDenseMinAnchors * span - (kDenseMinAnchors - 1) * (stage - 1)) / span;
}

int stageOfEpoch(int epoch, const CurriculumConfig& config) {
  config.validate();
  if (epoch < 1 || epoch > config.totalEpochs) {
    throw InvalidStage("epoch " + std::to_string(epoch) + " outside [1, " + std::to_string(config.totalEpochs) + "]");
  }
  const int perStage = config.totalEpochs / config.stages;
  const int stage = (epoch + perStage - 1) / perStage;
  return std::clamp(stage, 1, config.stages);
}

std::vector<int> minAnchorSchedule(int stages) {
  std::vector<int> out;
  for (int s = 1; s <= stages; ++s) {
    out.push_back(minAnchorsForStage(s, stages));
  }
  return out;
}

int maxMinGap(int frames, int count) {
  if (count <= 1) {
    return frames;
  }
  return std::min(frames / count, (frames - count) / (count - 1));
}

IterationParams sampleIterationParams(int stage, const CurriculumConfig& config, std::mt19937_64& rng) {
  config.validate();
  IterationParams out;
  out.stage = stage;
  const int upper = std::min(config.maxAnchors, config.frames);
  int lower = config.enabled ? minAnchorsForStage(stage, config.stages) : 1;
  if (lower > upper) {
    lower = upper;
    out.clamped = true;
  }
  out.count = std::uniform_int_distribution<int>(lower, upper)(rng);

  const int gapMax = maxMinGap(config.frames, out.count);
  if (gapMax >= config.minGapFloor) {
    out.minGap = std::uniform_int_distribution<int>(config.minGapFloor, gapMax)(rng);
  } else {
    out.minGap = gapMax;
    out.clamped = true;
  }
  return out;
}

} // namespace promogen
