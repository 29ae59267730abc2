#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "sadm/dynamics/model.hpp"
#include "sadm/harness/config.hpp"
#include "sadm/nn/checkpoint.hpp"
#include "sadm/nn/optim.hpp"

namespace sadm::harness {

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  /// Per-clip means over the epoch.
  double loss = 0.0;
  double flow = 0.0;
  double semantic = 0.0;
  double kl = 0.0;
};

nlohmann::json to_json(const EpochLog& e);

/// Model, optimizer and the next epoch to run.
struct DynamicsTrainState {
  dynamics::DynamicsModel model;
  nn::Adam adam;
  int epoch = 0;
  std::vector<EpochLog> log;
};

struct TrainHooks {
  /// Written after every `checkpoint_every` epochs and at the end when set.
  std::filesystem::path checkpoint;
  std::function<void(const EpochLog&)> on_epoch;
  /// Run at most this many epochs in this call (resume tests); negative = up to config.epochs.
  int max_epochs = -1;
};

/// Minibatch Adam over `data` with the step-decay schedule. Clip order per epoch and the noise of
/// every clip derive from config.seed and the epoch, so a resumed run matches an uninterrupted one.
void train_dynamics(const TrainConfig& config, DynamicsTrainState& state, const std::vector<core::Clip>& data,
                    const TrainHooks& hooks = {});

/// Mean loss of `data` under the current parameters (deterministic rollout).
double dynamics_loss(const dynamics::DynamicsModel& model, const std::vector<core::Clip>& data);

/// Archive keys: parameters under their own names, optimizer state under "adam.", metadata
/// {"stage", "epoch", "config", "train", "seed"}.
nn::Archive dynamics_archive(const DynamicsTrainState& state, const TrainConfig& config);
void save_dynamics(const std::filesystem::path& path, const DynamicsTrainState& state, const TrainConfig& config);
DynamicsTrainState load_dynamics(const std::filesystem::path& path);
/// Parameters only, from any archive that contains a dynamics model.
dynamics::DynamicsModel load_dynamics_model(const std::filesystem::path& path);

}  // namespace sadm::harness
