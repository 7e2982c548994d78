// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "promogen/autodiff.h"
#include "promogen/motion.h"
#include "promogen/parameters.h"

#include <cstdint>
#include <string>

namespace promogen {

/// Which features the initial motion generator is conditioned on.
enum class InitialCondition { kTrajectory, kAnchors };

struct NetworkConfig {
  int width = 64;
  int blocks = 2;             // transformer blocks in the generator and in the refiner
  int trajectoryBlocks = 1;   // transformer blocks inside the trajectory encoder
  int heads = 4;
  int mlpRatio = 2;
  int featureDim = 66;
  int anchorDim = 63;
  int maxFrames = 196;
  double conditionDropout = 0.1;
  InitialCondition initialCondition = InitialCondition::kTrajectory;

  /// Throws ConfigError.
  void validate() const;
};

/// Sinusoidal features of `value` in `dim` channels ([sin | cos] halves, max period 10000).
Eigen::RowVectorXd sinusoidalEmbedding(double value, int dim);
/// Frame-position encoding for frames 0..frames-1.
Matrix positionEncoding(Eigen::Index frames, int dim);

/// Per-frame trajectory input: world position and velocity (per second), frames x 6.
Matrix trajectoryInput(const Trajectory& trajectory, double fps);

/// Trajectory-and-anchor conditioned data predictor.
///
/// Stages: trajectory encoder and anchor encoder produce frames x width maps,
/// the initial generator turns (x_t, trajectory features) into coarse latents,
/// the refiner fuses [coarse | anchor | trajectory] features, and the decoder
/// projects back to motion features. Timestep enters every transformer block
/// through adaptive layer normalisation.
class Denoiser {
 public:
  explicit Denoiser(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }

  /// Deterministic for a given seed.
  ParameterSet initialize(std::uint64_t seed) const;

  ad::Var timestepEmbedding(const Graph& g, int t) const;
  /// `trajectory` may be null (learned null token).
  ad::Var encodeTrajectory(const Graph& g, const Trajectory* trajectory, Eigen::Index frames, double fps) const;
  /// `anchors` may be null or empty: every row is then the null embedding.
  ad::Var encodeAnchors(const Graph& g, const AnchorSet* anchors, Eigen::Index frames) const;
  ad::Var initialMotion(const Graph& g, ad::Var xt, ad::Var conditionFeatures, ad::Var timeEmbedding) const;
  ad::Var refine(const Graph& g, ad::Var coarse, ad::Var anchorFeatures, ad::Var trajectoryFeatures,
                 ad::Var timeEmbedding) const;
  ad::Var decode(const Graph& g, ad::Var refined) const;

  /// Full composition. Either condition may be null.
  ad::Var predict(const Graph& g, ad::Var xt, int t, const Trajectory* trajectory, const AnchorSet* anchors,
                  double fps = kDefaultFps) const;

  /// Inference-only convenience; parameters enter as constants.
  Matrix predict(const ParameterSet& params, const Matrix& xt, int t, const Trajectory* trajectory,
                 const AnchorSet* anchors, double fps = kDefaultFps) const;

  /// Adaptive-norm transformer block; exposed for gradient checks.
  ad::Var block(const Graph& g, const std::string& prefix, ad::Var h, ad::Var condition) const;

 private:
  void addBlock(ParameterSet& params, const std::string& prefix, std::mt19937_64& rng) const;
  ad::Var attention(const Graph& g, const std::string& prefix, ad::Var x) const;

  NetworkConfig config_;
};

} // namespace promogen
