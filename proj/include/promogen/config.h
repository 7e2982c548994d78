// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "promogen/curriculum.h"
#include "promogen/denoiser.h"
#include "promogen/diffusion.h"
#include "promogen/objectives.h"
#include "promogen/synthetic.h"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace promogen {

struct DiffusionConfig {
  int trainSteps = 1000;
  ScheduleKind schedule = ScheduleKind::kCosine;
  SamplerOptions sampler;
};

struct TrainConfig {
  double learningRate = 1e-4;
  int batch = 32;
  int iterationsPerEpoch = 20;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double clipNorm = 1.0;
  double discriminatorLearningRate = 1e-4;
  int discriminatorHidden = 64;
  std::uint64_t seed = 0;
  /// Adversarial loss only for t <= this bound; 0 means every timestep.
  int adversarialMaxStep = 0;
  bool adversarial = true;
  bool physical = true;
  /// curriculum.totalEpochs is E_total, curriculum.stages is E_stage, curriculum.maxAnchors is K_max.
  CurriculumConfig curriculum;
  DiffusionConfig diffusion;
  NetworkConfig network;
  LossWeights weights;
  PhysicalParams physics;

  void validate() const;
};

struct EvalProtocol {
  std::vector<int> anchorCounts{1, 3, 5, 7, 9};
  int items = 32;
  int diversityPairs = 300;
  int bootstrapResamples = 1000;
  int fidDims = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Everything one JSON document can set.
struct Config {
  TrainConfig train;
  SyntheticSpec data;
  EvalProtocol eval;

  void validate() const;
};

/// Unknown keys raise ConfigError. Absent keys keep their defaults.
Config configFromJson(const nlohmann::json& doc);
nlohmann::json toJson(const Config& config);
Config loadConfig(const std::filesystem::path& path);

/// Keeps the frame count consistent between data, curriculum and network.
void synchronizeFrames(Config& config);

} // namespace promogen
