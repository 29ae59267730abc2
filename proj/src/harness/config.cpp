#include "sadm/harness/config.hpp"

#include <fstream>

#include "sadm/core/error.hpp"
#include "sadm/nn/optim.hpp"

namespace sadm::harness {

double TrainConfig::lr_at(int epoch) const { return nn::step_decay_lr(learning_rate, lr_decay, decay_every, epoch); }

void TrainConfig::validate() const {
  if (learning_rate <= 0.0 || lr_decay <= 0.0 || decay_every < 1) throw ConfigError("bad learning-rate schedule");
  if (epochs < 0 || batch_size < 1 || clip_length < 2) throw ConfigError("bad epoch / batch / clip settings");
  if (alpha < 0.0 || beta < 0.0 || lambda < 0.0 || gamma < 0.0 || eta < 0.0) throw ConfigError("loss weights must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
}

void ExperimentConfig::sync() {
  dynamics.num_classes = world.num_classes();
  dynamics.observed_len = world.observed_len;
  dynamics.horizon = world.horizon;
  dynamics.alpha = train.alpha;
  dynamics.beta = train.beta;
  inpaint.num_classes = world.num_classes();
  inpaint.weights = {train_inpaint.lambda, train_inpaint.gamma, train_inpaint.eta};
  train.stage = Stage::kDynamics;
  train_inpaint.stage = Stage::kInpaint;
  train.clip_length = train_inpaint.clip_length = world.length();
}

void ExperimentConfig::validate() const {
  world.validate();
  dynamics.validate();
  inpaint.validate();
  train.validate();
  train_inpaint.validate();
  if (dynamics.num_classes != world.num_classes()) throw ConfigError("dynamics.num_classes disagrees with the world");
  if (world.height % dynamics.downsample || world.width % dynamics.downsample)
    throw ConfigError("canvas size must be divisible by the downsample factor");
  if (train_clips < 1 || test_clips < 1) throw ConfigError("need at least one train and one test clip");
}

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  c.train_inpaint.epochs = 10;
  c.sync();
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"stage", c.stage == Stage::kDynamics ? "dynamics" : "inpaint"},
          {"learning_rate", c.learning_rate},
          {"lr_decay", c.lr_decay},
          {"decay_every", c.decay_every},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"clip_length", c.clip_length},
          {"seed", c.seed},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"lambda", c.lambda},
          {"gamma", c.gamma},
          {"eta", c.eta},
          {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    const std::string stage = j.value("stage", "dynamics");
    if (stage == "dynamics") c.stage = Stage::kDynamics;
    else if (stage == "inpaint") c.stage = Stage::kInpaint;
    else throw ConfigError("unknown stage '" + stage + "'");
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.decay_every = j.value("decay_every", c.decay_every);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.clip_length = j.value("clip_length", c.clip_length);
    c.seed = j.value("seed", c.seed);
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.lambda = j.value("lambda", c.lambda);
    c.gamma = j.value("gamma", c.gamma);
    c.eta = j.value("eta", c.eta);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"world", synthworld::to_json(c.world)},
          {"dynamics", dynamics::to_json(c.dynamics)},
          {"inpaint", inpaint::to_json(c.inpaint)},
          {"train", to_json(c.train)},
          {"train_inpaint", to_json(c.train_inpaint)},
          {"train_clips", c.train_clips},
          {"test_clips", c.test_clips},
          {"stochastic_eval", c.stochastic_eval}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c = default_experiment();
  try {
    if (j.contains("world")) c.world = synthworld::world_spec_from_json(j.at("world"));
    if (j.contains("dynamics")) c.dynamics = dynamics::dynamics_config_from_json(j.at("dynamics"));
    if (j.contains("inpaint")) c.inpaint = inpaint::inpaint_config_from_json(j.at("inpaint"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("train_inpaint")) c.train_inpaint = train_config_from_json(j.at("train_inpaint"));
    c.train_clips = j.value("train_clips", c.train_clips);
    c.test_clips = j.value("test_clips", c.test_clips);
    c.stochastic_eval = j.value("stochastic_eval", c.stochastic_eval);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.sync();
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return experiment_from_json(j);
}

}  // namespace sadm::harness
