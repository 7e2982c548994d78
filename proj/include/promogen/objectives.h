// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "promogen/autodiff.h"
#include "promogen/motion.h"
#include "promogen/parameters.h"

#include <cstdint>
#include <span>

namespace promogen {

struct LossWeights {
  double reconstruction = 1.0;
  double anchor = 1.0;
  double joint = 1.0;
  double adversarial = 0.1;
  double physical = 0.1;

  /// Throws ConfigError on negative or non-finite weights.
  void validate() const;
};

struct PhysicalParams {
  double ground = 0.0;
  double contactHeight = 0.05;  // m
  double contactSpeed = 0.10;   // m/s
  double floatMargin = 0.10;    // m
  double fps = kDefaultFps;

  void validate() const;
};

struct LossComponents {
  double reconstruction = 0.0;
  double anchor = 0.0;
  double joint = 0.0;
  double adversarial = 0.0;
  double physical = 0.0;
};

double totalLoss(const LossComponents& components, const LossWeights& weights);
ad::Var totalLoss(ad::Var reconstruction, ad::Var anchor, ad::Var joint, ad::Var adversarial, ad::Var physical,
                  const LossWeights& weights);

/// Constant D x 3J map from feature rows to world joint positions.
Matrix worldProjection(const Skeleton& skeleton);

/// Mean squared error over all entries.
ad::Var l2Loss(ad::Var prediction, ad::Var target);
/// Mean squared error over anchor rows, pelvis columns excluded. Zero for no anchors.
ad::Var anchorLoss(ad::Var prediction, ad::Var target, std::span<const int> positions);
/// Squared world-position error summed over coordinates, averaged over frames and joints.
ad::Var jointLoss(ad::Var prediction, ad::Var target, const Skeleton& skeleton);
/// slip + float + penetration. The contact mask is computed from values and held constant.
ad::Var physicalLoss(ad::Var motion, const Skeleton& skeleton, const PhysicalParams& params);

struct PhysicalTerms {
  double slip = 0.0;
  double floating = 0.0;
  double penetration = 0.0;

  double total() const { return slip + floating + penetration; }
};

PhysicalTerms physicalTerms(const Matrix& motion, const Skeleton& skeleton, const PhysicalParams& params);

double l2Loss(const Matrix& prediction, const Matrix& target);
double anchorLoss(const Matrix& prediction, const Matrix& target, std::span<const int> positions);
double jointLoss(const Matrix& prediction, const Matrix& target, const Skeleton& skeleton);
double physicalLoss(const Matrix& motion, const Skeleton& skeleton, const PhysicalParams& params);

/// Sequence-level critic: three fully connected layers over pooled features and
/// pooled squared frame differences.
class Discriminator {
 public:
  explicit Discriminator(int featureDim, int hidden = 64);

  int featureDim() const { return featureDim_; }
  int hidden() const { return hidden_; }

  ParameterSet initialize(std::uint64_t seed) const;

  /// 1 x 2D summary of one N x D motion.
  static ad::Var summary(ad::Var motion);
  /// 1 x 1 logit.
  ad::Var logit(const Graph& g, ad::Var motion) const;

 private:
  int featureDim_;
  int hidden_;
};

struct AdversarialLosses {
  ad::Var discriminator;
  ad::Var generator;
};

/// Non-saturating logistic losses from n x 1 logit columns:
/// L_D = (mean softplus(-real) + mean softplus(fake)) / 2, L_G = mean softplus(-fake).
AdversarialLosses adversarialLosses(ad::Var realLogits, ad::Var fakeLogits);

/// Generator-side loss for a single fake logit: softplus(-logit).
ad::Var generatorLoss(ad::Var fakeLogit);

} // namespace promogen
