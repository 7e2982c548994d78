// SPDX-License-Identifier: Apache-2.0
#include "promogen/pipeline.h"

#include "promogen/anchor_filter.h"
#include "promogen/errors.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

namespace promogen {

using ad::Var;

namespace {

struct SamplePlan {
  int index = 0;
  int step = 1;
  std::vector<int> positions;
  bool dropTrajectory = false;
  bool dropAnchors = false;
  Matrix noise;
};

struct SampleState {
  std::unique_ptr<ad::Tape> tape;
  Var prediction;
  Var reconstruction;
  Var anchor;
  Var joint;
  Var physical;
  bool adversarial = false;
};

void checkDataset(const std::vector<MotionSequence>& dataset, int frames, int width) {
  if (dataset.empty()) {
    throw Error("training dataset is empty");
  }
  for (const MotionSequence& m : dataset) {
    if (m.frameCount() != frames || m.featureDim() != width) {
      throw ShapeError("dataset motion is " + std::to_string(m.frameCount()) + "x" + std::to_string(m.featureDim()) +
                       ", expected " + std::to_string(frames) + "x" + std::to_string(width));
    }
    requireValid(m, width);
  }
}

Var scalarSum(std::span<const Var> terms) {
  Var total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) {
    total = ad::add(total, terms[i]);
  }
  return total;
}

MetricsReport summarize(const std::vector<double>& mp, const std::vector<double>& kmp, const std::vector<double>& js,
                        const std::vector<double>& dm, int dmUndefined, std::span<const MotionSequence> generated,
                        std::span<const MotionSequence> real, const EvalProtocol& protocol, std::mt19937_64& rng) {
  MetricsReport r;
  r.samples = static_cast<int>(mp.size());
  r.seed = protocol.seed;
  r.mpjpe = bootstrapInterval(mp, rng, protocol.bootstrapResamples);
  r.kMpjpe = bootstrapInterval(kmp, rng, protocol.bootstrapResamples);
  r.js = bootstrapInterval(js, rng, protocol.bootstrapResamples);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.dm = dm.empty() ? Interval{nan, nan, nan} : bootstrapInterval(dm, rng, protocol.bootstrapResamples);
  r.dmUndefined = dmUndefined;
  r.diversity = generated.size() >= 2 ? diversity(generated, protocol.diversityPairs, rng) : 0.0;
  const FidFeatures features(static_cast<int>(real.front().featureDim()), protocol.fidDims, protocol.seed + 101);
  r.fid = generated.size() >= 2 && real.size() >= 2 ? fid(generated, real, features) : nan;
  return r;
}

} // namespace

nlohmann::json EpochRecord::toJson() const {
  return {{"epoch", epoch},
          {"stage", stage},
          {"k_min", minAnchors},
          {"f_n", {countLow, countHigh}},
          {"f_s", {gapLow, gapHigh}},
          {"clamped", clampedIterations},
          {"l2", components.reconstruction},
          {"anchor", components.anchor},
          {"joint", components.joint},
          {"gan", components.adversarial},
          {"phys", components.physical},
          {"total", total},
          {"disc", discriminator}};
}

TrainResult train(const std::vector<MotionSequence>& dataset, const TrainConfig& config, const Skeleton& skeleton,
                  const EpochCallback& onEpoch) {
  config.validate();
  const CurriculumConfig& cc = config.curriculum;
  const int frames = cc.frames;
  const int width = skeleton.featureDim();
  checkDataset(dataset, frames, width);

  NetworkConfig net = config.network;
  net.featureDim = width;
  net.anchorDim = skeleton.anchorDim();
  const Denoiser denoiser(net);
  const Discriminator critic(width, config.discriminatorHidden);
  const NoiseSchedule schedule = NoiseSchedule::build(config.diffusion.trainSteps, config.diffusion.schedule);
  const double fps = dataset.front().fps;

  TrainResult result;
  result.model = denoiser.initialize(config.seed);
  result.discriminator = critic.initialize(config.seed + 1);

  Adam::Options gOpts{config.learningRate, config.beta1, config.beta2, 1e-8, 0.0, config.clipNorm};
  Adam::Options dOpts{config.discriminatorLearningRate, 0.5, config.beta2, 1e-8, 0.0, config.clipNorm};
  Adam generatorOpt(gOpts);
  Adam criticOpt(dOpts);

  LossWeights weights = config.weights;
  const bool useAdversarial = config.adversarial && weights.adversarial > 0.0;
  if (!config.adversarial) {
    weights.adversarial = 0.0;
  }
  if (!config.physical) {
    weights.physical = 0.0;
  }
  const int ganMaxStep = config.adversarialMaxStep > 0 ? config.adversarialMaxStep : schedule.steps();

  std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL);
  std::uniform_int_distribution<int> pickItem(0, static_cast<int>(dataset.size()) - 1);
  std::uniform_int_distribution<int> pickStep(1, schedule.steps());
  std::bernoulli_distribution drop(net.conditionDropout);

  for (int epoch = 1; epoch <= cc.totalEpochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.stage = stageOfEpoch(epoch, cc);
    rec.minAnchors = cc.enabled ? minAnchorsForStage(rec.stage, cc.stages) : 1;
    rec.countLow = std::numeric_limits<int>::max();
    rec.gapLow = std::numeric_limits<int>::max();

    for (int iter = 0; iter < config.iterationsPerEpoch; ++iter) {
      const IterationParams ip = sampleIterationParams(rec.stage, cc, rng);
      rec.countLow = std::min(rec.countLow, ip.count);
      rec.countHigh = std::max(rec.countHigh, ip.count);
      rec.gapLow = std::min(rec.gapLow, ip.minGap);
      rec.gapHigh = std::max(rec.gapHigh, ip.minGap);
      rec.clampedIterations += ip.clamped ? 1 : 0;

      std::vector<SamplePlan> plans(static_cast<std::size_t>(config.batch));
      for (SamplePlan& p : plans) {
        p.index = pickItem(rng);
        p.positions = sampleAnchors({frames, ip.count, ip.minGap}, rng);
        assert(satisfiesGap(p.positions, frames, ip.minGap));
        p.dropTrajectory = drop(rng);
        p.dropAnchors = drop(rng);
        p.step = pickStep(rng);
        p.noise = gaussian(frames, width, rng);
      }

      // Generator forward passes, one tape per sample.
      std::vector<SampleState> states(plans.size());
      for (std::size_t b = 0; b < plans.size(); ++b) {
        const SamplePlan& p = plans[b];
        const MotionSequence& x0 = dataset[static_cast<std::size_t>(p.index)];
        SampleState& s = states[b];
        s.tape = std::make_unique<ad::Tape>();
        ad::Tape& tape = *s.tape;
        const Graph g{tape, result.model, true};
        const Trajectory trajectory = extractTrajectory(x0);
        const AnchorSet anchors = gatherAnchors(x0, p.positions);
        Var xt = tape.constant(qSample(x0.features, p.step, p.noise, schedule));
        s.prediction = denoiser.predict(g, xt, p.step, p.dropTrajectory ? nullptr : &trajectory,
                                        p.dropAnchors ? nullptr : &anchors, fps);
        Var target = tape.constant(x0.features);
        s.reconstruction = l2Loss(s.prediction, target);
        s.anchor = anchorLoss(s.prediction, target, p.positions);
        s.joint = jointLoss(s.prediction, target, skeleton);
        s.physical = config.physical ? physicalLoss(s.prediction, skeleton, config.physics)
                                     : tape.constant(Matrix::Zero(1, 1));
        s.adversarial = useAdversarial && p.step <= ganMaxStep;
      }

      // Discriminator step on detached predictions.
      double discLoss = 0.0;
      if (useAdversarial) {
        ad::Tape tape;
        const Graph g{tape, result.discriminator, true};
        std::vector<Var> realTerms;
        std::vector<Var> fakeTerms;
        for (std::size_t b = 0; b < plans.size(); ++b) {
          const Matrix& real = dataset[static_cast<std::size_t>(plans[b].index)].features;
          realTerms.push_back(ad::softplus(ad::neg(critic.logit(g, tape.constant(real)))));
          if (states[b].adversarial) {
            fakeTerms.push_back(ad::softplus(critic.logit(g, tape.constant(states[b].prediction.value()))));
          }
        }
        Var loss = ad::scale(scalarSum(realTerms), 0.5 / static_cast<double>(realTerms.size()));
        if (!fakeTerms.empty()) {
          loss = ad::add(loss, ad::scale(scalarSum(fakeTerms), 0.5 / static_cast<double>(fakeTerms.size())));
        }
        tape.backward(loss);
        discLoss = loss.scalar();
        criticOpt.step(result.discriminator, tape.parameterGradients());
      }

      // Generator step with the updated discriminator.
      Gradients grads;
      LossComponents mean;
      double meanTotal = 0.0;
      const double invBatch = 1.0 / static_cast<double>(plans.size());
      for (SampleState& s : states) {
        ad::Tape& tape = *s.tape;
        Var adversarial = tape.constant(Matrix::Zero(1, 1));
        if (s.adversarial) {
          const Graph frozen{tape, result.discriminator, false};
          adversarial = generatorLoss(critic.logit(frozen, s.prediction));
        }
        Var total = totalLoss(s.reconstruction, s.anchor, s.joint, adversarial, s.physical, weights);
        tape.backward(total);
        accumulateGradients(grads, tape.parameterGradients(), invBatch);
        mean.reconstruction += invBatch * s.reconstruction.scalar();
        mean.anchor += invBatch * s.anchor.scalar();
        mean.joint += invBatch * s.joint.scalar();
        mean.adversarial += invBatch * adversarial.scalar();
        mean.physical += invBatch * s.physical.scalar();
        meanTotal += invBatch * total.scalar();
        s.tape.reset();
      }
      generatorOpt.step(result.model, grads);

      result.iterationLoss.push_back(meanTotal);
      const double invIters = 1.0 / config.iterationsPerEpoch;
      rec.components.reconstruction += invIters * mean.reconstruction;
      rec.components.anchor += invIters * mean.anchor;
      rec.components.joint += invIters * mean.joint;
      rec.components.adversarial += invIters * mean.adversarial;
      rec.components.physical += invIters * mean.physical;
      rec.total += invIters * meanTotal;
      rec.discriminator += invIters * discLoss;
    }
    if (!result.model.allFinite()) {
      throw Error("training diverged at epoch " + std::to_string(epoch));
    }
    result.log.push_back(rec);
    if (onEpoch) {
      onEpoch(rec);
    }
  }
  return result;
}

MotionSequence sampleMotion(const Denoiser& denoiser, const ParameterSet& params, const NoiseSchedule& schedule,
                            const SamplerOptions& options, const Trajectory* trajectory, const AnchorSet* anchors,
                            int frames, double fps, std::mt19937_64& rng) {
  const DataPredictor model = [&](const Matrix& xt, int t) {
    return denoiser.predict(params, xt, t, trajectory, anchors, fps);
  };
  MotionSequence out;
  out.fps = fps;
  out.features = sample(model, frames, denoiser.config().featureDim, schedule, options, rng);
  return out;
}

MotionGenerator modelGenerator(const Denoiser& denoiser, const ParameterSet& params, const NoiseSchedule& schedule,
                               const SamplerOptions& options) {
  return [&denoiser, &params, &schedule, options](const MotionSequence& truth, const Trajectory& trajectory,
                                                   const AnchorSet& anchors, std::mt19937_64& rng) {
    return sampleMotion(denoiser, params, schedule, options, &trajectory, &anchors,
                        static_cast<int>(truth.frameCount()), truth.fps, rng);
  };
}

const MetricsReport& EvaluationReport::forCount(int count) const {
  for (const auto& [c, report] : perCount) {
    if (c == count) {
      return report;
    }
  }
  throw Error("no evaluation result for anchor count " + std::to_string(count));
}

std::string EvaluationReport::toJson(int indent) const {
  nlohmann::json j;
  j["overall"] = nlohmann::json::parse(overall.toJson());
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [count, report] : perCount) {
    nlohmann::json item = nlohmann::json::parse(report.toJson());
    item["f_n"] = count;
    per.push_back(std::move(item));
  }
  j["per_count"] = std::move(per);
  return j.dump(indent);
}

EvaluationReport evaluate(const std::vector<MotionSequence>& dataset, const MotionGenerator& generator,
                          const EvalProtocol& protocol, const CurriculumConfig& curriculum, const Skeleton& skeleton) {
  protocol.validate();
  if (dataset.empty()) {
    throw Error("evaluation dataset is empty");
  }
  const std::size_t items = std::min<std::size_t>(dataset.size(), static_cast<std::size_t>(protocol.items));
  const std::span<const MotionSequence> real(dataset.data(), items);
  std::mt19937_64 rng(protocol.seed);

  EvaluationReport report;
  std::vector<double> allMp, allKmp, allJs, allDm;
  std::vector<MotionSequence> allGenerated;
  int allUndefined = 0;
  for (int count : protocol.anchorCounts) {
    std::vector<double> mp, kmp, js, dm;
    std::vector<MotionSequence> generated;
    int undefined = 0;
    for (std::size_t i = 0; i < items; ++i) {
      const MotionSequence& truth = dataset[i];
      const int frames = static_cast<int>(truth.frameCount());
      if (truth.featureDim() != skeleton.featureDim()) {
        throw ShapeError("evaluation motion width does not match the skeleton");
      }
      const int gapMax = maxMinGap(frames, count);
      int gap = gapMax;
      if (gapMax >= curriculum.minGapFloor) {
        gap = std::uniform_int_distribution<int>(curriculum.minGapFloor, gapMax)(rng);
      }
      const std::vector<int> positions = sampleAnchors({frames, count, gap}, rng);
      const Trajectory trajectory = extractTrajectory(truth);
      const AnchorSet anchors = gatherAnchors(truth, positions);
      MotionSequence gen = generator(truth, trajectory, anchors, rng);
      requireValid(gen, skeleton.featureDim());
      mp.push_back(mpjpe(gen, truth, skeleton));
      kmp.push_back(kMpjpe(gen, truth, skeleton, positions));
      js.push_back(jointSmoothness(gen, skeleton));
      try {
        dm.push_back(directionalConsistency(gen, trajectory));
      } catch (const UndefinedMetric&) {
        ++undefined;
      }
      generated.push_back(std::move(gen));
    }
    MetricsReport r = summarize(mp, kmp, js, dm, undefined, generated, real, protocol, rng);
    r.anchorCounts = {count};
    report.perCount.emplace_back(count, std::move(r));
    allMp.insert(allMp.end(), mp.begin(), mp.end());
    allKmp.insert(allKmp.end(), kmp.begin(), kmp.end());
    allJs.insert(allJs.end(), js.begin(), js.end());
    allDm.insert(allDm.end(), dm.begin(), dm.end());
    allUndefined += undefined;
    std::move(generated.begin(), generated.end(), std::back_inserter(allGenerated));
  }
  report.overall = summarize(allMp, allKmp, allJs, allDm, allUndefined, allGenerated, real, protocol, rng);
  report.overall.anchorCounts = protocol.anchorCounts;
  return report;
}

std::string trajectorySvg(const Trajectory& trajectory, const std::vector<int>& anchorFrames, int size) {
  const Eigen::Index n = trajectory.frameCount();
  if (n == 0) {
    throw ShapeError("empty trajectory");
  }
  const Matrix& p = trajectory.positions;
  const double minX = p.col(0).minCoeff();
  const double maxX = p.col(0).maxCoeff();
  const double minZ = p.col(2).minCoeff();
  const double maxZ = p.col(2).maxCoeff();
  const double span = std::max({maxX - minX, maxZ - minZ, 1e-6});
  const double margin = 0.05 * size;
  const double scale = (size - 2.0 * margin) / span;
  const auto px = [&](Eigen::Index f) { return margin + (p(f, 0) - minX) * scale; };
  const auto pz = [&](Eigen::Index f) { return size - margin - (p(f, 2) - minZ) * scale; };
  // Purple (68, 1, 84) to yellow (253, 231, 37).
  const auto colour = [&](Eigen::Index f) {
    const double s = n > 1 ? static_cast<double>(f) / static_cast<double>(n - 1) : 0.0;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(68 + s * (253 - 68))),
                  static_cast<int>(std::lround(1 + s * (231 - 1))), static_cast<int>(std::lround(84 + s * (37 - 84))));
    return std::string(buf);
  };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
      << size << ' ' << size << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (Eigen::Index f = 1; f < n; ++f) {
    svg << "<line x1=\"" << px(f - 1) << "\" y1=\"" << pz(f - 1) << "\" x2=\"" << px(f) << "\" y2=\"" << pz(f)
        << "\" stroke=\"" << colour(f) << "\" stroke-width=\"3\" stroke-linecap=\"round\"/>\n";
  }
  for (int f : anchorFrames) {
    if (f < 0 || f >= n) {
      throw InvalidAnchorPositions("anchor frame outside the trajectory");
    }
    svg << "<circle cx=\"" << px(f) << "\" cy=\"" << pz(f) << "\" r=\"6\" fill=\"none\" stroke=\"" << colour(f)
        << "\" stroke-width=\"2\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

} // namespace promogen
