// SPDX-License-Identifier: Apache-2.0
#include "promogen/denoiser.h"

#include "promogen/errors.h"

#include <cmath>
#include <vector>

namespace promogen {

using ad::Var;

namespace {

constexpr double kAdaInitStd = 0.02;
constexpr double kNullInitStd = 0.5;

Var linear(const Graph& g, const std::string& prefix, Var x) {
  return ad::addRow(ad::matmul(x, g(prefix + ".w")), g(prefix + ".b"));
}

void addLinear(ParameterSet& params, const std::string& prefix, int in, int out, std::mt19937_64& rng) {
  params.set(prefix + ".w", glorotUniform(in, out, rng));
  params.set(prefix + ".b", Matrix::Zero(1, out));
}

void requireShape(Var v, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (v.rows() != rows || v.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", got " + std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
  }
}

} // namespace

void NetworkConfig::validate() const {
  if (width < 1 || blocks < 0 || trajectoryBlocks < 0 || heads < 1 || mlpRatio < 1 || featureDim < 1 ||
      anchorDim < 1 || maxFrames < 1) {
    throw ConfigError("network dimensions must be positive");
  }
  if (width % heads != 0) {
    throw ConfigError("width " + std::to_string(width) + " not divisible by heads " + std::to_string(heads));
  }
  if (width % 2 != 0) {
    throw ConfigError("width must be even for sinusoidal embeddings");
  }
  if (conditionDropout < 0.0 || conditionDropout > 1.0) {
    throw ConfigError("condition dropout must lie in [0, 1]");
  }
}

Eigen::RowVectorXd sinusoidalEmbedding(double value, int dim) {
  const int half = dim / 2;
  Eigen::RowVectorXd out(dim);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    out(i) = std::sin(value * freq);
    out(half + i) = std::cos(value * freq);
  }
  return out;
}

Matrix positionEncoding(Eigen::Index frames, int dim) {
  Matrix pe(frames, dim);
  for (Eigen::Index f = 0; f < frames; ++f) {
    pe.row(f) = sinusoidalEmbedding(static_cast<double>(f), dim);
  }
  return pe;
}

Matrix trajectoryInput(const Trajectory& trajectory, double fps) {
  const Eigen::Index n = trajectory.frameCount();
  Matrix in(n, 6);
  in.leftCols(3) = trajectory.positions;
  in.rightCols(3).setZero();
  if (n > 1) {
    in.block(1, 3, n - 1, 3) = (trajectory.positions.bottomRows(n - 1) - trajectory.positions.topRows(n - 1)) * fps;
    in.block(0, 3, 1, 3) = in.block(1, 3, 1, 3);
  }
  return in;
}

Denoiser::Denoiser(NetworkConfig config) : config_(config) {
  config_.validate();
}

void Denoiser::addBlock(ParameterSet& params, const std::string& prefix, std::mt19937_64& rng) const {
  const int d = config_.width;
  params.set(prefix + ".ada.w", normalInit(d, 6 * d, kAdaInitStd, rng));
  params.set(prefix + ".ada.b", Matrix::Zero(1, 6 * d));
  addLinear(params, prefix + ".attn.qkv", d, 3 * d, rng);
  addLinear(params, prefix + ".attn.out", d, d, rng);
  addLinear(params, prefix + ".mlp.fc1", d, config_.mlpRatio * d, rng);
  addLinear(params, prefix + ".mlp.fc2", config_.mlpRatio * d, d, rng);
}

ParameterSet Denoiser::initialize(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  const int d = config_.width;
  ParameterSet p;
  addLinear(p, "time.fc1", d, d, rng);
  addLinear(p, "time.fc2", d, d, rng);

  addLinear(p, "traj.in1", 6, d, rng);
  addLinear(p, "traj.in2", d, d, rng);
  for (int b = 0; b < config_.trajectoryBlocks; ++b) {
    addBlock(p, "traj.block" + std::to_string(b), rng);
  }
  addLinear(p, "traj.out", d, d, rng);
  p.set("traj.null", normalInit(1, d, kNullInitStd, rng));

  addLinear(p, "anchor.in1", config_.anchorDim, d, rng);
  addLinear(p, "anchor.in2", d, d, rng);
  p.set("anchor.null", normalInit(1, d, kNullInitStd, rng));

  addLinear(p, "init.in", config_.featureDim, d, rng);
  p.set("init.cond.w", glorotUniform(d, d, rng));
  for (int b = 0; b < config_.blocks; ++b) {
    addBlock(p, "init.block" + std::to_string(b), rng);
  }

  addLinear(p, "refine.in", 3 * d, d, rng);
  for (int b = 0; b < config_.blocks; ++b) {
    addBlock(p, "refine.block" + std::to_string(b), rng);
  }

  addLinear(p, "decode", d, config_.featureDim, rng);
  return p;
}

Var Denoiser::attention(const Graph& g, const std::string& prefix, Var x) const {
  const int d = config_.width;
  const int heads = config_.heads;
  const int headDim = d / heads;
  const double invSqrt = 1.0 / std::sqrt(static_cast<double>(headDim));
  Var qkv = linear(g, prefix + ".qkv", x);
  std::vector<Var> outputs;
  outputs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var q = ad::sliceCols(qkv, h * headDim, headDim);
    Var k = ad::sliceCols(qkv, d + h * headDim, headDim);
    Var v = ad::sliceCols(qkv, 2 * d + h * headDim, headDim);
    Var weights = ad::softmaxRows(ad::scale(ad::matmulNT(q, k), invSqrt));
    outputs.push_back(ad::matmul(weights, v));
  }
  Var merged = heads == 1 ? outputs[0] : ad::concatCols(outputs);
  return linear(g, prefix + ".out", merged);
}

Var Denoiser::block(const Graph& g, const std::string& prefix, Var h, Var condition) const {
  const int d = config_.width;
  Var mod = ad::addRow(ad::matmul(ad::silu(condition), g(prefix + ".ada.w")), g(prefix + ".ada.b"));
  Var shift1 = ad::sliceCols(mod, 0, d);
  Var scale1 = ad::shift(ad::sliceCols(mod, d, d), 1.0);
  Var gate1 = ad::sliceCols(mod, 2 * d, d);
  Var shift2 = ad::sliceCols(mod, 3 * d, d);
  Var scale2 = ad::shift(ad::sliceCols(mod, 4 * d, d), 1.0);
  Var gate2 = ad::sliceCols(mod, 5 * d, d);

  Var normed = ad::addRow(ad::mulRow(ad::layerNormRows(h), scale1), shift1);
  h = ad::add(h, ad::mulRow(attention(g, prefix + ".attn", normed), gate1));

  normed = ad::addRow(ad::mulRow(ad::layerNormRows(h), scale2), shift2);
  Var hidden = ad::silu(linear(g, prefix + ".mlp.fc1", normed));
  return ad::add(h, ad::mulRow(linear(g, prefix + ".mlp.fc2", hidden), gate2));
}

Var Denoiser::timestepEmbedding(const Graph& g, int t) const {
  Var base = g.tape.constant(sinusoidalEmbedding(static_cast<double>(t), config_.width));
  return linear(g, "time.fc2", ad::silu(linear(g, "time.fc1", base)));
}

Var Denoiser::encodeTrajectory(const Graph& g, const Trajectory* trajectory, Eigen::Index frames, double fps) const {
  Var pe = g.tape.constant(positionEncoding(frames, config_.width));
  if (trajectory == nullptr) {
    return ad::add(pe, ad::broadcastRows(g("traj.null"), frames));
  }
  if (trajectory->frameCount() != frames || trajectory->positions.cols() != 3) {
    throw ShapeError("trajectory must be " + std::to_string(frames) + "x3");
  }
  Var in = g.tape.constant(trajectoryInput(*trajectory, fps));
  Var h = ad::add(linear(g, "traj.in2", ad::silu(linear(g, "traj.in1", in))), pe);
  if (config_.trajectoryBlocks > 0) {
    Var none = g.tape.constant(Matrix::Zero(1, config_.width));
    for (int b = 0; b < config_.trajectoryBlocks; ++b) {
      h = block(g, "traj.block" + std::to_string(b), h, none);
    }
  }
  return ad::add(pe, linear(g, "traj.out", h));
}

Var Denoiser::encodeAnchors(const Graph& g, const AnchorSet* anchors, Eigen::Index frames) const {
  Var nullRows = ad::broadcastRows(g("anchor.null"), frames);
  if (anchors == nullptr || anchors->empty()) {
    return nullRows;
  }
  checkAnchorPositions(anchors->positions(), frames);
  if (anchors->poses().cols() != config_.anchorDim) {
    throw ShapeError("anchor poses must have " + std::to_string(config_.anchorDim) + " columns");
  }
  const std::vector<int>& positions = anchors->positions();
  Matrix pe(static_cast<Eigen::Index>(positions.size()), config_.width);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    pe.row(static_cast<Eigen::Index>(k)) = sinusoidalEmbedding(positions[k], config_.width);
  }
  Var poses = g.tape.constant(anchors->poses());
  Var encoded = ad::add(linear(g, "anchor.in2", ad::silu(linear(g, "anchor.in1", poses))), g.tape.constant(pe));
  return ad::scatterRows(nullRows, encoded, positions);
}

Var Denoiser::initialMotion(const Graph& g, Var xt, Var conditionFeatures, Var timeEmbedding) const {
  const Eigen::Index frames = xt.rows();
  requireShape(xt, frames, config_.featureDim, "initialMotion x_t");
  requireShape(conditionFeatures, frames, config_.width, "initialMotion condition");
  requireShape(timeEmbedding, 1, config_.width, "initialMotion time embedding");
  Var h = ad::add(linear(g, "init.in", xt), conditionFeatures);
  Var c = ad::add(timeEmbedding, ad::matmul(ad::meanRows(conditionFeatures), g("init.cond.w")));
  for (int b = 0; b < config_.blocks; ++b) {
    h = block(g, "init.block" + std::to_string(b), h, c);
  }
  return h;
}

Var Denoiser::refine(const Graph& g, Var coarse, Var anchorFeatures, Var trajectoryFeatures, Var timeEmbedding) const {
  const Eigen::Index frames = coarse.rows();
  requireShape(coarse, frames, config_.width, "refine coarse");
  requireShape(anchorFeatures, frames, config_.width, "refine anchors");
  requireShape(trajectoryFeatures, frames, config_.width, "refine trajectory");
  requireShape(timeEmbedding, 1, config_.width, "refine time embedding");
  Var h = linear(g, "refine.in", ad::concatCols({coarse, anchorFeatures, trajectoryFeatures}));
  for (int b = 0; b < config_.blocks; ++b) {
    h = block(g, "refine.block" + std::to_string(b), h, timeEmbedding);
  }
  return h;
}

Var Denoiser::decode(const Graph& g, Var refined) const {
  requireShape(refined, refined.rows(), config_.width, "decode input");
  return linear(g, "decode", refined);
}

Var Denoiser::predict(const Graph& g, Var xt, int t, const Trajectory* trajectory, const AnchorSet* anchors,
                      double fps) const {
  const Eigen::Index frames = xt.rows();
  if (frames < 1 || frames > config_.maxFrames) {
    throw ShapeError("frame count " + std::to_string(frames) + " outside [1, " + std::to_string(config_.maxFrames) +
                     "]");
  }
  requireShape(xt, frames, config_.featureDim, "predict x_t");
  Var timeEmb = timestepEmbedding(g, t);
  Var trajFeatures = encodeTrajectory(g, trajectory, frames, fps);
  Var anchorFeatures = encodeAnchors(g, anchors, frames);
  Var conditioning = config_.initialCondition == InitialCondition::kTrajectory ? trajFeatures : anchorFeatures;
  Var coarse = initialMotion(g, xt, conditioning, timeEmb);
  return decode(g, refine(g, coarse, anchorFeatures, trajFeatures, timeEmb));
}

Matrix Denoiser::predict(const ParameterSet& params, const Matrix& xt, int t, const Trajectory* trajectory,
                         const AnchorSet* anchors, double fps) const {
  ad::Tape tape;
  Graph g{tape, params, false};
  return predict(g, tape.constant(xt), t, trajectory, anchors, fps).value();
}

} // namespace promogen
