#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "sadm/dynamics/config.hpp"
#include "sadm/inpaint/config.hpp"
#include "sadm/synthworld/world.hpp"

namespace sadm::harness {

enum class Stage { kDynamics, kInpaint };

struct TrainConfig {
  Stage stage = Stage::kDynamics;
  double learning_rate = 0.001;
  double lr_decay = 0.8;
  int decay_every = 20;  // epochs
  int epochs = 40;
  int batch_size = 8;
  int clip_length = 10;
  std::uint64_t seed = 0;
  /// Loss weights. alpha and beta feed the dynamics objective, lambda/gamma/eta the inpainting one.
  double alpha = 5.0;
  double beta = 0.1;
  double lambda = 2.0;
  double gamma = 2.0;
  double eta = 1.0;
  /// Write a checkpoint every this many epochs (0: only at the end).
  int checkpoint_every = 0;

  double lr_at(int epoch) const;
  void validate() const;
};

/// Everything one experiment needs; the CLI's --config file holds this as JSON.
struct ExperimentConfig {
  synthworld::WorldSpec world = synthworld::default_world_spec();
  dynamics::DynamicsConfig dynamics;
  inpaint::InpaintConfig inpaint;
  TrainConfig train;
  TrainConfig train_inpaint;
  int train_clips = 256;
  int test_clips = 64;
  /// Stochastic rollout at evaluation time.
  bool stochastic_eval = false;

  /// Keeps the derived fields (class count, T, K, alpha, beta) in agreement.
  void sync();
  void validate() const;
};

ExperimentConfig default_experiment();

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
/// Missing keys keep their defaults.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path);

}  // namespace sadm::harness
