// SPDX-License-Identifier: Apache-2.0
#include "promogen/config.h"

#include "promogen/errors.h"

#include <fstream>
#include <set>

namespace promogen {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects anything it was not asked about.
class Section {
 public:
  Section(const json& doc, const std::string& name) : name_(name) {
    if (doc.contains(name)) {
      node_ = &doc.at(name);
      if (!node_->is_object()) {
        throw ConfigError("config section '" + name + "' must be an object");
      }
    }
  }

  ~Section() noexcept(false) {
    if (node_ == nullptr || std::uncaught_exceptions() > 0) {
      return;
    }
    for (const auto& item : node_->items()) {
      if (seen_.count(item.key()) == 0) {
        throw ConfigError("unknown config key '" + name_ + "." + item.key() + "'");
      }
    }
  }

  template <typename T>
  void read(const std::string& key, T& target) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) {
      return;
    }
    try {
      target = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + name_ + "." + key + "': " + e.what());
    }
  }

  void readSwitch(const std::string& key, bool& target) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) {
      return;
    }
    const json& v = node_->at(key);
    if (v.is_boolean()) {
      target = v.get<bool>();
    } else if (v.is_string() && (v == "on" || v == "off")) {
      target = v == "on";
    } else {
      throw ConfigError("config key '" + name_ + "." + key + "' must be on|off");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

} // namespace

void TrainConfig::validate() const {
  if (!(learningRate > 0.0) || !(discriminatorLearningRate > 0.0) || batch < 1 || iterationsPerEpoch < 1 ||
      discriminatorHidden < 1) {
    throw ConfigError("training rates and sizes must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optimizer betas must lie in [0, 1)");
  }
  if (adversarialMaxStep < 0) {
    throw ConfigError("loss.gan_max_t must be >= 0");
  }
  curriculum.validate();
  network.validate();
  weights.validate();
  physics.validate();
  if (diffusion.trainSteps < 1 || diffusion.sampler.steps < 1) {
    throw ConfigError("diffusion step counts must be positive");
  }
  if (diffusion.sampler.order != 1 && diffusion.sampler.order != 2) {
    throw ConfigError("diffusion.order must be 1 or 2");
  }
  if (curriculum.frames > network.maxFrames) {
    throw ConfigError("frame count exceeds network.max_frames");
  }
}

void EvalProtocol::validate() const {
  if (anchorCounts.empty() || items < 1 || diversityPairs < 1 || bootstrapResamples < 1 || fidDims < 1) {
    throw ConfigError("evaluation protocol sizes must be positive");
  }
  for (int c : anchorCounts) {
    if (c < 1) {
      throw ConfigError("evaluation anchor counts must be >= 1");
    }
  }
}

void Config::validate() const {
  train.validate();
  data.validate();
  eval.validate();
  if (data.frames != train.curriculum.frames) {
    throw ConfigError("data.frames and curriculum frames disagree");
  }
}

void synchronizeFrames(Config& config) {
  config.train.curriculum.frames = config.data.frames;
  config.train.network.maxFrames = std::max(config.train.network.maxFrames, config.data.frames);
  config.train.physics.fps = config.data.fps;
}

Config configFromJson(const json& doc) {
  if (!doc.is_object()) {
    throw ConfigError("config root must be an object");
  }
  static const std::set<std::string> known = {"diffusion", "loss", "phys", "network", "train",
                                              "curriculum", "data", "eval"};
  for (const auto& item : doc.items()) {
    if (known.count(item.key()) == 0) {
      throw ConfigError("unknown config section '" + item.key() + "'");
    }
  }

  Config c;
  TrainConfig& t = c.train;
  {
    Section s(doc, "diffusion");
    s.read("T", t.diffusion.trainSteps);
    std::string schedule = toString(t.diffusion.schedule);
    s.read("schedule", schedule);
    t.diffusion.schedule = parseScheduleKind(schedule);
    s.read("steps", t.diffusion.sampler.steps);
    s.read("order", t.diffusion.sampler.order);
    s.readSwitch("denoise_final", t.diffusion.sampler.denoiseFinal);
  }
  {
    Section s(doc, "loss");
    s.read("lambda1", t.weights.reconstruction);
    s.read("lambda2", t.weights.anchor);
    s.read("lambda3", t.weights.joint);
    s.read("lambda4", t.weights.adversarial);
    s.read("lambda5", t.weights.physical);
    s.readSwitch("gan", t.adversarial);
    s.readSwitch("phys", t.physical);
    s.read("gan_max_t", t.adversarialMaxStep);
  }
  {
    Section s(doc, "phys");
    s.read("ground", t.physics.ground);
    s.read("contact_height", t.physics.contactHeight);
    s.read("contact_speed", t.physics.contactSpeed);
    s.read("float_margin", t.physics.floatMargin);
  }
  {
    Section s(doc, "network");
    s.read("width", t.network.width);
    s.read("blocks", t.network.blocks);
    s.read("trajectory_blocks", t.network.trajectoryBlocks);
    s.read("heads", t.network.heads);
    s.read("mlp_ratio", t.network.mlpRatio);
    s.read("max_frames", t.network.maxFrames);
    s.read("cond_dropout", t.network.conditionDropout);
    std::string img = t.network.initialCondition == InitialCondition::kTrajectory ? "trajectory" : "anchors";
    s.read("img_condition", img);
    if (img == "trajectory") {
      t.network.initialCondition = InitialCondition::kTrajectory;
    } else if (img == "anchors") {
      t.network.initialCondition = InitialCondition::kAnchors;
    } else {
      throw ConfigError("network.img_condition must be trajectory|anchors");
    }
  }
  {
    Section s(doc, "train");
    s.read("lr", t.learningRate);
    s.read("batch", t.batch);
    s.read("iterations_per_epoch", t.iterationsPerEpoch);
    s.read("beta1", t.beta1);
    s.read("beta2", t.beta2);
    s.read("clip_norm", t.clipNorm);
    s.read("disc_lr", t.discriminatorLearningRate);
    s.read("disc_hidden", t.discriminatorHidden);
    s.read("seed", t.seed);
    s.readSwitch("curriculum", t.curriculum.enabled);
  }
  {
    Section s(doc, "curriculum");
    s.read("total_epochs", t.curriculum.totalEpochs);
    s.read("stages", t.curriculum.stages);
    s.read("max_anchors", t.curriculum.maxAnchors);
    s.read("min_gap_floor", t.curriculum.minGapFloor);
  }
  {
    Section s(doc, "data");
    SyntheticSpec& d = c.data;
    s.read("count", d.count);
    s.read("frames", d.frames);
    s.read("fps", d.fps);
    s.read("seed", d.seed);
    s.read("control_points", d.controlPoints);
    s.read("start_spread", d.startSpread);
    s.read("min_step", d.minStep);
    s.read("max_step", d.maxStep);
    s.read("max_turn", d.maxTurn);
    s.read("max_amplitude", d.maxAmplitude);
    s.read("amplitude_scale", d.amplitudeScale);
    s.read("min_frequency", d.minFrequency);
    s.read("max_frequency", d.maxFrequency);
    s.read("style_angle", d.styleAngle);
  }
  {
    Section s(doc, "eval");
    s.read("anchor_counts", c.eval.anchorCounts);
    s.read("items", c.eval.items);
    s.read("diversity_pairs", c.eval.diversityPairs);
    s.read("bootstrap", c.eval.bootstrapResamples);
    s.read("fid_dims", c.eval.fidDims);
    s.read("seed", c.eval.seed);
  }
  synchronizeFrames(c);
  c.validate();
  return c;
}

json toJson(const Config& c) {
  const TrainConfig& t = c.train;
  const SyntheticSpec& d = c.data;
  json j;
  j["diffusion"] = {{"T", t.diffusion.trainSteps},
                    {"schedule", toString(t.diffusion.schedule)},
                    {"steps", t.diffusion.sampler.steps},
                    {"order", t.diffusion.sampler.order},
                    {"denoise_final", t.diffusion.sampler.denoiseFinal}};
  j["loss"] = {{"lambda1", t.weights.reconstruction}, {"lambda2", t.weights.anchor},
               {"lambda3", t.weights.joint},          {"lambda4", t.weights.adversarial},
               {"lambda5", t.weights.physical},       {"gan", t.adversarial ? "on" : "off"},
               {"phys", t.physical ? "on" : "off"},   {"gan_max_t", t.adversarialMaxStep}};
  j["phys"] = {{"ground", t.physics.ground},
               {"contact_height", t.physics.contactHeight},
               {"contact_speed", t.physics.contactSpeed},
               {"float_margin", t.physics.floatMargin}};
  j["network"] = {{"width", t.network.width},
                  {"blocks", t.network.blocks},
                  {"trajectory_blocks", t.network.trajectoryBlocks},
                  {"heads", t.network.heads},
                  {"mlp_ratio", t.network.mlpRatio},
                  {"max_frames", t.network.maxFrames},
                  {"cond_dropout", t.network.conditionDropout},
                  {"img_condition",
                   t.network.initialCondition == InitialCondition::kTrajectory ? "trajectory" : "anchors"}};
  j["train"] = {{"lr", t.learningRate},
                {"batch", t.batch},
                {"iterations_per_epoch", t.iterationsPerEpoch},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"clip_norm", t.clipNorm},
                {"disc_lr", t.discriminatorLearningRate},
                {"disc_hidden", t.discriminatorHidden},
                {"seed", t.seed},
                {"curriculum", t.curriculum.enabled ? "on" : "off"}};
  j["curriculum"] = {{"total_epochs", t.curriculum.totalEpochs},
                     {"stages", t.curriculum.stages},
                     {"max_anchors", t.curriculum.maxAnchors},
                     {"min_gap_floor", t.curriculum.minGapFloor}};
  j["data"] = {{"count", d.count},
               {"frames", d.frames},
               {"fps", d.fps},
               {"seed", d.seed},
               {"control_points", d.controlPoints},
               {"start_spread", d.startSpread},
               {"min_step", d.minStep},
               {"max_step", d.maxStep},
               {"max_turn", d.maxTurn},
               {"max_amplitude", d.maxAmplitude},
               {"amplitude_scale", d.amplitudeScale},
               {"min_frequency", d.minFrequency},
               {"max_frequency", d.maxFrequency},
               {"style_angle", d.styleAngle}};
  j["eval"] = {{"anchor_counts", c.eval.anchorCounts},
               {"items", c.eval.items},
               {"diversity_pairs", c.eval.diversityPairs},
               {"bootstrap", c.eval.bootstrapResamples},
               {"fid_dims", c.eval.fidDims},
               {"seed", c.eval.seed}};
  return j;
}

Config loadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return configFromJson(doc);
}

} // namespace promogen
