// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "promogen/checkpoint.h"
#include "promogen/config.h"
#include "promogen/metrics.h"

#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace promogen {

/// Aggregate of one training epoch.
struct EpochRecord {
  int epoch = 0;
  int stage = 0;
  int minAnchors = 1;  // curriculum lower bound; 1 with the curriculum disabled
  int countLow = 0;
  int countHigh = 0;
  int gapLow = 0;
  int gapHigh = 0;
  int clampedIterations = 0;
  LossComponents components;  // batch means
  double total = 0.0;
  double discriminator = 0.0;

  nlohmann::json toJson() const;
};

struct TrainResult {
  ParameterSet model;
  ParameterSet discriminator;
  std::vector<EpochRecord> log;
  std::vector<double> iterationLoss;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Runs curriculum.totalEpochs epochs of iterationsPerEpoch iterations each.
/// Every motion must have curriculum.frames frames and the skeleton's width.
TrainResult train(const std::vector<MotionSequence>& dataset, const TrainConfig& config, const Skeleton& skeleton,
                  const EpochCallback& onEpoch = {});

/// Runs the sampler with either condition optionally null.
MotionSequence sampleMotion(const Denoiser& denoiser, const ParameterSet& params, const NoiseSchedule& schedule,
                            const SamplerOptions& options, const Trajectory* trajectory, const AnchorSet* anchors,
                            int frames, double fps, std::mt19937_64& rng);

/// Produces a motion for one evaluation item. `truth` is exposed for oracle generators.
using MotionGenerator = std::function<MotionSequence(const MotionSequence& truth, const Trajectory& trajectory,
                                                     const AnchorSet& anchors, std::mt19937_64& rng)>;

MotionGenerator modelGenerator(const Denoiser& denoiser, const ParameterSet& params, const NoiseSchedule& schedule,
                               const SamplerOptions& options);

struct EvaluationReport {
  MetricsReport overall;
  std::vector<std::pair<int, MetricsReport>> perCount;

  const MetricsReport& forCount(int count) const;
  std::string toJson(int indent = 2) const;
};

/// For each of the first protocol.items motions and each anchor count, places anchors
/// with the filtering sampler (interval elasticity drawn as in training), generates
/// and scores the result.
EvaluationReport evaluate(const std::vector<MotionSequence>& dataset, const MotionGenerator& generator,
                          const EvalProtocol& protocol, const CurriculumConfig& curriculum, const Skeleton& skeleton);

/// Pelvis path as a polyline coloured from purple to yellow, anchors as circles (top view, x/z).
std::string trajectorySvg(const Trajectory& trajectory, const std::vector<int>& anchorFrames, int size = 512);

} // namespace promogen
