// SPDX-License-Identifier: Apache-2.0
// Command-line front end: data generation, training, sampling, evaluation.
#include "promogen/anchor_filter.h"
#include "promogen/checkpoint.h"
#include "promogen/config.h"
#include "promogen/errors.h"
#include "promogen/pipeline.h"
#include "promogen/synthetic.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace promogen;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

Config resolveConfig(const Common& c) {
  Config cfg = c.config.empty() ? configFromJson(json::object()) : loadConfig(c.config);
  if (c.seed) {
    cfg.train.seed = *c.seed;
    cfg.data.seed = *c.seed;
    cfg.eval.seed = *c.seed;
  }
  return cfg;
}

void addCommon(CLI::App* app, Common& c, const std::string& outHelp) {
  app->add_option("--config", c.config, "JSON config document");
  app->add_option("--seed", c.seed, "Override every seed in the config");
  app->add_option("--out", c.out, outHelp);
}

std::ostream& output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") {
    return std::cout;
  }
  file.open(path);
  if (!file) {
    throw Error("cannot write " + path);
  }
  return file;
}

AnchorSet readAnchors(const std::string& path, int anchorDim) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open anchors file " + path);
  }
  const json doc = json::parse(in);
  const auto positions = doc.at("positions").get<std::vector<int>>();
  if (doc.contains("from")) {
    const MotionSequence source = readPmg(doc.at("from").get<std::string>());
    return gatherAnchors(source, positions);
  }
  const auto rows = doc.at("poses").get<std::vector<std::vector<double>>>();
  Matrix poses(static_cast<Eigen::Index>(rows.size()), anchorDim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != anchorDim) {
      throw ShapeError("anchor pose " + std::to_string(r) + " must have " + std::to_string(anchorDim) + " values");
    }
    for (int c = 0; c < anchorDim; ++c) {
      poses(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
  }
  return AnchorSet::fromUnsorted(positions, poses);
}

MotionSequence readJointCsv(const std::string& path, double fps) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty()) {
        continue;  // header
      }
      throw FormatError("non-numeric row in " + path);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("ragged rows in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() % 3 != 0) {
    throw FormatError(path + " must hold frames x (3 * joints) world positions");
  }
  JointPositions joints{Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()))};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      joints.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return fromJointPositions(joints, fps);
}

Denoiser makeDenoiser(const Config& cfg, const Skeleton& skeleton) {
  NetworkConfig net = cfg.train.network;
  net.featureDim = skeleton.featureDim();
  net.anchorDim = skeleton.anchorDim();
  return Denoiser(net);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory- and anchor-conditioned motion diffusion"};
  app.require_subcommand(1);
  const Skeleton skeleton = Skeleton::humanml22();

  Common genOpts;
  std::optional<int> genCount;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset of .pmg files");
  addCommon(gen, genOpts, "Output directory");
  gen->add_option("--count", genCount, "Number of sequences (overrides data.count)");

  Common trainOpts;
  std::string trainData;
  std::string trainLog;
  auto* trainCmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  addCommon(trainCmd, trainOpts, "Checkpoint path");
  trainCmd->add_option("--data", trainData, "Dataset directory (synthetic data is generated when omitted)");
  trainCmd->add_option("--log", trainLog, "Per-epoch JSON lines log (default: stderr)");

  Common sampleOpts;
  std::string sampleCkpt, sampleTraj, sampleAnchorsPath, sampleSvg;
  std::optional<int> sampleSteps, sampleFrames;
  auto* sampleCmd = app.add_subcommand("sample", "Generate a motion from a checkpoint");
  addCommon(sampleCmd, sampleOpts, "Output .pmg path");
  sampleCmd->add_option("--checkpoint", sampleCkpt, "Checkpoint path")->required();
  sampleCmd->add_option("--trajectory", sampleTraj, "Trajectory CSV (frame,x,y,z)");
  sampleCmd->add_option("--anchors", sampleAnchorsPath, "Anchors JSON {positions, poses | from}");
  sampleCmd->add_option("--steps", sampleSteps, "Sampler steps");
  sampleCmd->add_option("--frames", sampleFrames, "Frame count when no trajectory is given");
  sampleCmd->add_option("--svg", sampleSvg, "Write a top-view SVG of the pelvis path");

  Common evalOpts;
  std::string evalCkpt, evalData;
  std::vector<int> evalCounts;
  auto* evalCmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  addCommon(evalCmd, evalOpts, "Report path (default: stdout)");
  evalCmd->add_option("--checkpoint", evalCkpt, "Checkpoint path")->required();
  evalCmd->add_option("--data", evalData, "Dataset directory (held-out synthetic data when omitted)");
  evalCmd->add_option("--anchor-counts", evalCounts, "Anchor counts to evaluate");

  Common fmOpts;
  int fmFrames = 64, fmCount = 5, fmGap = 4, fmDraws = 1;
  auto* fm = app.add_subcommand("fm-sample", "Draw uniform anchor placements");
  addCommon(fm, fmOpts, "Output path (default: stdout)");
  fm->add_option("--n", fmFrames, "Sequence length");
  fm->add_option("--fn", fmCount, "Temporal density (anchors per placement)");
  fm->add_option("--fs", fmGap, "Interval elasticity");
  fm->add_option("--count", fmDraws, "Number of placements");

  Common schedOpts;
  auto* sched = app.add_subcommand("schedule-dump", "Print curriculum and noise schedules");
  addCommon(sched, schedOpts, "Output path (default: stdout)");
  std::optional<int> schedEpochs, schedStages, schedMaxAnchors;
  sched->add_option("--etotal", schedEpochs, "Total epochs");
  sched->add_option("--estage", schedStages, "Number of stages");
  sched->add_option("--kmax", schedMaxAnchors, "Maximum anchor count");

  Common convOpts;
  std::string convInput;
  double convFps = kDefaultFps;
  auto* conv = app.add_subcommand("convert", "Convert a joint-position CSV into .pmg");
  addCommon(conv, convOpts, "Output .pmg path");
  conv->add_option("--input", convInput, "CSV with frames x (3 * joints) world positions")->required();
  conv->add_option("--fps", convFps, "Frame rate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      Config cfg = resolveConfig(genOpts);
      if (genCount) {
        cfg.data.count = *genCount;
      }
      const std::string dir = genOpts.out.empty() ? "data" : genOpts.out;
      saveDataset(dir, generateSynthetic(cfg.data, skeleton), skeleton.jointCount());
      std::cerr << "wrote " << cfg.data.count << " sequences to " << dir << "\n";
    } else if (*trainCmd) {
      const Config cfg = resolveConfig(trainOpts);
      const std::vector<MotionSequence> data =
          trainData.empty() ? generateSynthetic(cfg.data, skeleton) : loadDataset(trainData);
      std::ofstream logFile;
      std::ostream& log = trainLog.empty() ? std::cerr : (logFile.open(trainLog), logFile);
      TrainResult result =
          train(data, cfg.train, skeleton, [&](const EpochRecord& r) { log << r.toJson().dump() << std::endl; });
      const std::string path = trainOpts.out.empty() ? "checkpoint.pgc" : trainOpts.out;
      saveCheckpoint(path, {cfg, result.model, result.discriminator});
      std::cerr << "saved " << path << "\n";
    } else if (*sampleCmd) {
      const Checkpoint ckpt = loadCheckpoint(sampleCkpt);
      Config cfg = ckpt.config;
      if (sampleOpts.seed) {
        cfg.train.seed = *sampleOpts.seed;
      }
      if (sampleSteps) {
        cfg.train.diffusion.sampler.steps = *sampleSteps;
      }
      const Denoiser denoiser = makeDenoiser(cfg, skeleton);
      const NoiseSchedule schedule = NoiseSchedule::build(cfg.train.diffusion.trainSteps, cfg.train.diffusion.schedule);
      std::optional<Trajectory> trajectory;
      std::optional<AnchorSet> anchors;
      if (!sampleTraj.empty()) {
        trajectory = readTrajectoryCsv(sampleTraj);
      }
      if (!sampleAnchorsPath.empty()) {
        anchors = readAnchors(sampleAnchorsPath, skeleton.anchorDim());
      }
      const int frames = trajectory ? static_cast<int>(trajectory->frameCount()) : sampleFrames.value_or(cfg.data.frames);
      std::mt19937_64 rng(cfg.train.seed);
      const MotionSequence motion =
          sampleMotion(denoiser, ckpt.model, schedule, cfg.train.diffusion.sampler, trajectory ? &*trajectory : nullptr,
                       anchors ? &*anchors : nullptr, frames, cfg.data.fps, rng);
      requireValid(motion, skeleton.featureDim());
      const std::string path = sampleOpts.out.empty() ? "sample.pmg" : sampleOpts.out;
      writePmg(path, motion, skeleton.jointCount());
      if (!sampleSvg.empty()) {
        std::ofstream svg(sampleSvg);
        svg << trajectorySvg(extractTrajectory(motion), anchors ? anchors->positions() : std::vector<int>{});
      }
      std::cerr << "wrote " << path << "\n";
    } else if (*evalCmd) {
      const Checkpoint ckpt = loadCheckpoint(evalCkpt);
      Config cfg = ckpt.config;
      if (evalOpts.seed) {
        cfg.eval.seed = *evalOpts.seed;
      }
      if (!evalCounts.empty()) {
        cfg.eval.anchorCounts = evalCounts;
      }
      std::vector<MotionSequence> data;
      if (evalData.empty()) {
        SyntheticSpec held = cfg.data;
        held.seed = cfg.data.seed + 1000003;
        held.count = cfg.eval.items;
        data = generateSynthetic(held, skeleton);
      } else {
        data = loadDataset(evalData);
      }
      const Denoiser denoiser = makeDenoiser(cfg, skeleton);
      const NoiseSchedule schedule = NoiseSchedule::build(cfg.train.diffusion.trainSteps, cfg.train.diffusion.schedule);
      const EvaluationReport report =
          evaluate(data, modelGenerator(denoiser, ckpt.model, schedule, cfg.train.diffusion.sampler), cfg.eval,
                   cfg.train.curriculum, skeleton);
      std::ofstream file;
      output(evalOpts.out, file) << report.toJson() << "\n";
    } else if (*fm) {
      std::mt19937_64 rng(fmOpts.seed.value_or(0));
      const FilterParams params{fmFrames, fmCount, fmGap};
      std::ofstream file;
      std::ostream& out = output(fmOpts.out, file);
      for (int i = 0; i < fmDraws; ++i) {
        out << json(sampleAnchors(params, rng)).dump() << "\n";
      }
    } else if (*sched) {
      Config cfg = resolveConfig(schedOpts);
      CurriculumConfig& cc = cfg.train.curriculum;
      cc.totalEpochs = schedEpochs.value_or(cc.totalEpochs);
      cc.stages = schedStages.value_or(cc.stages);
      cc.maxAnchors = schedMaxAnchors.value_or(cc.maxAnchors);
      cc.validate();
      json doc;
      doc["k_min"] = minAnchorSchedule(cc.stages);
      doc["k_max"] = cc.maxAnchors;
      json stages = json::array();
      for (int s = 1; s <= cc.stages; ++s) {
        int first = 0, last = 0;
        for (int e = 1; e <= cc.totalEpochs; ++e) {
          if (stageOfEpoch(e, cc) == s) {
            first = first == 0 ? e : first;
            last = e;
          }
        }
        stages.push_back({{"stage", s}, {"k_min", minAnchorsForStage(s, cc.stages)}, {"epochs", {first, last}}});
      }
      doc["stages"] = std::move(stages);
      json epochs = json::array();
      for (int e = 1; e <= cc.totalEpochs; ++e) {
        const int stage = stageOfEpoch(e, cc);
        epochs.push_back({{"epoch", e}, {"stage", stage}, {"k_min", minAnchorsForStage(stage, cc.stages)}});
      }
      doc["epochs"] = std::move(epochs);
      const NoiseSchedule ns = NoiseSchedule::build(cfg.train.diffusion.trainSteps, cfg.train.diffusion.schedule);
      json noise = json::array();
      for (int t : timeGrid(ns.steps(), cfg.train.diffusion.sampler.steps)) {
        noise.push_back({{"t", t}, {"alpha_bar", ns.alphaBar(t)}, {"log_snr", ns.logSnr(t)}});
      }
      doc["sampler_grid"] = std::move(noise);
      std::ofstream file;
      output(schedOpts.out, file) << doc.dump(2) << "\n";
    } else if (*conv) {
      const MotionSequence motion = readJointCsv(convInput, convFps);
      requireValid(motion);
      const std::string path = convOpts.out.empty() ? "converted.pmg" : convOpts.out;
      writePmg(path, motion, static_cast<int>(motion.featureDim() / 3));
      std::cerr << "wrote " << path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
