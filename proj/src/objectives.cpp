// SPDX-License-Identifier: Apache-2.0
#include "promogen/objectives.h"

#include "promogen/errors.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace promogen {

using ad::Var;

namespace {

// Keeps the speed gradient finite at zero velocity. The offset is subtracted again so a still foot has speed 0.
constexpr double kSpeedEps = 1e-18;

void requireSameShape(Var a, Var b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + " differ");
  }
}

void requireSkeletonWidth(Var motion, const Skeleton& skeleton) {
  if (motion.cols() != skeleton.featureDim()) {
    throw ShapeError("motion width " + std::to_string(motion.cols()) + " does not match skeleton width " +
                     std::to_string(skeleton.featureDim()));
  }
}

Var zeroScalar(Var like) {
  return like.tape().constant(Matrix::Zero(1, 1));
}

bool finiteNonNegative(double v) {
  return std::isfinite(v) && v >= 0.0;
}

struct PhysicalVars {
  Var slip;
  Var floating;
  Var penetration;
};

PhysicalVars physicalVars(Var motion, const Skeleton& skeleton, const PhysicalParams& params) {
  params.validate();
  requireSkeletonWidth(motion, skeleton);
  const std::vector<int>& feet = skeleton.footJoints();
  const Eigen::Index n = motion.rows();
  const int footCount = static_cast<int>(feet.size());
  ad::Tape& tape = motion.tape();

  const Matrix full = worldProjection(skeleton);
  Matrix footMap(full.rows(), 3 * footCount);
  for (int k = 0; k < footCount; ++k) {
    footMap.middleCols(3 * k, 3) = full.middleCols(3 * feet[k], 3);
  }
  Var world = ad::matmul(motion, tape.constant(footMap));

  std::vector<Var> heights;
  for (int k = 0; k < footCount; ++k) {
    heights.push_back(ad::shift(ad::sliceCols(world, 3 * k + 1, 1), -params.ground));
  }
  Var heightCols = footCount == 1 ? heights[0] : ad::concatCols(heights);

  PhysicalVars out;
  out.penetration = ad::mean(ad::relu(ad::neg(heightCols)));

  Var lowest = heights[0];
  for (int k = 1; k < footCount; ++k) {
    lowest = ad::minimum(lowest, heights[k]);
  }
  out.floating = ad::mean(ad::relu(ad::shift(lowest, -params.floatMargin)));

  if (n < 2) {
    out.slip = zeroScalar(motion);
    return out;
  }
  std::vector<Var> speeds;
  for (int k = 0; k < footCount; ++k) {
    Var dx = ad::diffRows(ad::sliceCols(world, 3 * k, 1));
    Var dz = ad::diffRows(ad::sliceCols(world, 3 * k + 2, 1));
    Var smooth = ad::shift(ad::sqrt(ad::shift(ad::add(ad::square(dx), ad::square(dz)), kSpeedEps)), -std::sqrt(kSpeedEps));
    speeds.push_back(ad::scale(smooth, params.fps));
  }
  Var speedCols = footCount == 1 ? speeds[0] : ad::concatCols(speeds);

  const Matrix& speedValue = speedCols.value();
  const Matrix& heightValue = heightCols.value();
  Matrix mask = Matrix::Zero(n - 1, footCount);
  double contacts = 0.0;
  for (Eigen::Index f = 1; f < n; ++f) {
    for (int k = 0; k < footCount; ++k) {
      if (heightValue(f, k) < params.contactHeight && speedValue(f - 1, k) < params.contactSpeed) {
        mask(f - 1, k) = 1.0;
        contacts += 1.0;
      }
    }
  }
  if (contacts == 0.0) {
    out.slip = zeroScalar(motion);
  } else {
    out.slip = ad::scale(ad::sum(ad::mul(speedCols, tape.constant(mask))), 1.0 / contacts);
  }
  return out;
}

} // namespace

void LossWeights::validate() const {
  for (double w : {reconstruction, anchor, joint, adversarial, physical}) {
    if (!finiteNonNegative(w)) {
      throw ConfigError("loss weights must be finite and non-negative");
    }
  }
}

void PhysicalParams::validate() const {
  if (!(contactHeight > 0.0) || !(contactSpeed > 0.0) || !(floatMargin >= 0.0) || !(fps > 0.0) ||
      !std::isfinite(ground)) {
    throw ConfigError("physical thresholds must be positive");
  }
}

double totalLoss(const LossComponents& c, const LossWeights& w) {
  return w.reconstruction * c.reconstruction + w.anchor * c.anchor + w.joint * c.joint +
         w.adversarial * c.adversarial + w.physical * c.physical;
}

Var totalLoss(Var reconstruction, Var anchor, Var joint, Var adversarial, Var physical, const LossWeights& w) {
  Var total = ad::scale(reconstruction, w.reconstruction);
  total = ad::add(total, ad::scale(anchor, w.anchor));
  total = ad::add(total, ad::scale(joint, w.joint));
  total = ad::add(total, ad::scale(adversarial, w.adversarial));
  return ad::add(total, ad::scale(physical, w.physical));
}

Matrix worldProjection(const Skeleton& skeleton) {
  const int joints = skeleton.jointCount();
  Matrix w = Matrix::Zero(skeleton.featureDim(), 3 * joints);
  for (int j = 0; j < joints; ++j) {
    for (int a = 0; a < 3; ++a) {
      w(a, 3 * j + a) = 1.0;
      if (j != skeleton.root()) {
        w(skeleton.column(j, a), 3 * j + a) = 1.0;
      }
    }
  }
  return w;
}

Var l2Loss(Var prediction, Var target) {
  requireSameShape(prediction, target, "l2Loss");
  return ad::mean(ad::square(ad::sub(prediction, target)));
}

Var anchorLoss(Var prediction, Var target, std::span<const int> positions) {
  requireSameShape(prediction, target, "anchorLoss");
  if (positions.empty()) {
    return zeroScalar(prediction);
  }
  checkAnchorPositions(positions, prediction.rows());
  const Eigen::Index width = prediction.cols() - kPelvisColumns;
  Var p = ad::sliceCols(ad::gatherRows(prediction, positions), kPelvisColumns, width);
  Var t = ad::sliceCols(ad::gatherRows(target, positions), kPelvisColumns, width);
  return ad::mean(ad::square(ad::sub(p, t)));
}

Var jointLoss(Var prediction, Var target, const Skeleton& skeleton) {
  requireSameShape(prediction, target, "jointLoss");
  requireSkeletonWidth(prediction, skeleton);
  Var world = ad::matmul(ad::sub(prediction, target), prediction.tape().constant(worldProjection(skeleton)));
  const double count = static_cast<double>(prediction.rows()) * skeleton.jointCount();
  return ad::scale(ad::sum(ad::square(world)), 1.0 / count);
}

Var physicalLoss(Var motion, const Skeleton& skeleton, const PhysicalParams& params) {
  PhysicalVars v = physicalVars(motion, skeleton, params);
  return ad::add(ad::add(v.slip, v.floating), v.penetration);
}

PhysicalTerms physicalTerms(const Matrix& motion, const Skeleton& skeleton, const PhysicalParams& params) {
  ad::Tape tape;
  PhysicalVars v = physicalVars(tape.constant(motion), skeleton, params);
  return {v.slip.scalar(), v.floating.scalar(), v.penetration.scalar()};
}

double l2Loss(const Matrix& prediction, const Matrix& target) {
  ad::Tape tape;
  return l2Loss(tape.constant(prediction), tape.constant(target)).scalar();
}

double anchorLoss(const Matrix& prediction, const Matrix& target, std::span<const int> positions) {
  ad::Tape tape;
  return anchorLoss(tape.constant(prediction), tape.constant(target), positions).scalar();
}

double jointLoss(const Matrix& prediction, const Matrix& target, const Skeleton& skeleton) {
  ad::Tape tape;
  return jointLoss(tape.constant(prediction), tape.constant(target), skeleton).scalar();
}

double physicalLoss(const Matrix& motion, const Skeleton& skeleton, const PhysicalParams& params) {
  return physicalTerms(motion, skeleton, params).total();
}

Discriminator::Discriminator(int featureDim, int hidden) : featureDim_(featureDim), hidden_(hidden) {
  if (featureDim < 1 || hidden < 1) {
    throw ConfigError("discriminator dimensions must be positive");
  }
}

ParameterSet Discriminator::initialize(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  ParameterSet p;
  p.set("disc.fc1.w", glorotUniform(2 * featureDim_, hidden_, rng));
  p.set("disc.fc1.b", Matrix::Zero(1, hidden_));
  p.set("disc.fc2.w", glorotUniform(hidden_, hidden_, rng));
  p.set("disc.fc2.b", Matrix::Zero(1, hidden_));
  p.set("disc.fc3.w", glorotUniform(hidden_, 1, rng));
  p.set("disc.fc3.b", Matrix::Zero(1, 1));
  return p;
}

Var Discriminator::summary(Var motion) {
  if (motion.rows() < 2) {
    throw ShapeError("discriminator needs at least two frames");
  }
  return ad::concatCols({ad::meanRows(motion), ad::meanRows(ad::square(ad::diffRows(motion)))});
}

Var Discriminator::logit(const Graph& g, Var motion) const {
  if (motion.cols() != featureDim_) {
    throw ShapeError("discriminator input width mismatch");
  }
  Var h = ad::silu(ad::addRow(ad::matmul(summary(motion), g("disc.fc1.w")), g("disc.fc1.b")));
  h = ad::silu(ad::addRow(ad::matmul(h, g("disc.fc2.w")), g("disc.fc2.b")));
  return ad::addRow(ad::matmul(h, g("disc.fc3.w")), g("disc.fc3.b"));
}

AdversarialLosses adversarialLosses(Var realLogits, Var fakeLogits) {
  Var real = ad::mean(ad::softplus(ad::neg(realLogits)));
  Var fake = ad::mean(ad::softplus(fakeLogits));
  return {ad::scale(ad::add(real, fake), 0.5), ad::mean(ad::softplus(ad::neg(fakeLogits)))};
}

Var generatorLoss(Var fakeLogit) {
  return ad::mean(ad::softplus(ad::neg(fakeLogit)));
}

} // namespace promogen
