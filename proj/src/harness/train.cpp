#include "sadm/harness/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "sadm/core/error.hpp"
#include "sadm/dynamics/losses.hpp"
#include "sadm/synthworld/world.hpp"

namespace sadm::harness {

nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.loss}, {"flow", e.flow}, {"semantic", e.semantic}, {"kl", e.kl}};
}

void train_dynamics(const TrainConfig& config, DynamicsTrainState& state, const std::vector<core::Clip>& data,
                    const TrainHooks& hooks) {
  config.validate();
  if (data.empty()) throw ConfigError("train_dynamics: empty dataset");
  const auto& mcfg = state.model.config();
  const dynamics::Mode mode = mcfg.stochastic ? dynamics::Mode::kStochastic : dynamics::Mode::kDeterministic;
  const int last = hooks.max_epochs < 0 ? config.epochs : std::min(config.epochs, state.epoch + hooks.max_epochs);

  for (; state.epoch < last; ++state.epoch) {
    const int epoch = state.epoch;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(synthworld::derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog log;
    log.epoch = epoch;
    log.lr = config.lr_at(epoch);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      nn::TensorMap grads;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        std::mt19937_64 noise(synthworld::derive_seed(config.seed ^ 0x9e3779b97f4a7c15ull, static_cast<std::uint64_t>(epoch) * data.size() + idx));
        dynamics::DynamicsPass pass(state.model, true);
        const auto loss = dynamics::clip_loss(pass, data[idx], mode, noise);
        nn::backward(loss.total);
        nn::accumulate(grads, pass.binding().gradients(), 1.0 / static_cast<double>(end - start));
        log.loss += loss.total.item();
        log.flow += loss.flow.item();
        log.semantic += loss.semantic.item();
        if (loss.kl.defined()) log.kl += loss.kl.item();
      }
      state.adam.step(state.model.params(), grads, log.lr);
    }
    const double n = static_cast<double>(data.size());
    log.loss /= n;
    log.flow /= n;
    log.semantic /= n;
    log.kl /= n;
    state.log.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    if (!hooks.checkpoint.empty() && config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
      DynamicsTrainState snapshot = state;
      snapshot.epoch = epoch + 1;
      save_dynamics(hooks.checkpoint, snapshot, config);
    }
  }
  if (!hooks.checkpoint.empty()) save_dynamics(hooks.checkpoint, state, config);
}

double dynamics_loss(const dynamics::DynamicsModel& model, const std::vector<core::Clip>& data) {
  double total = 0.0;
  std::mt19937_64 noise(0);
  for (const auto& clip : data) {
    dynamics::DynamicsPass pass(model, false);
    total += dynamics::clip_loss(pass, clip, dynamics::Mode::kDeterministic, noise).total.item();
  }
  return total / static_cast<double>(data.size());
}

nn::Archive dynamics_archive(const DynamicsTrainState& state, const TrainConfig& config) {
  nn::Archive a;
  a.insert("", state.model.params().entries());
  a.insert("", state.adam.state());
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : state.log) log.push_back(to_json(e));
  a.metadata = {{"stage", "dynamics"},
                {"epoch", state.epoch},
                {"seed", config.seed},
                {"config", dynamics::to_json(state.model.config())},
                {"train", to_json(config)},
                {"log", log}};
  return a;
}

void save_dynamics(const std::filesystem::path& path, const DynamicsTrainState& state, const TrainConfig& config) {
  nn::save_archive(path, dynamics_archive(state, config));
}

namespace {

dynamics::DynamicsModel model_from_archive(const nn::Archive& a) {
  if (!a.metadata.contains("config")) throw ConfigError("archive has no dynamics config");
  const auto cfg = dynamics::dynamics_config_from_json(a.metadata.at("config"));
  nn::ParamStore params;
  for (const auto& [k, t] : a.with_prefix("dynamics.")) params.add("dynamics." + k, t);
  return dynamics::DynamicsModel(cfg, std::move(params));
}

}  // namespace

DynamicsTrainState load_dynamics(const std::filesystem::path& path) {
  const nn::Archive a = nn::load_archive(path);
  if (a.metadata.value("stage", "") != "dynamics") throw ConfigError(path.string() + " is not a dynamics checkpoint");
  DynamicsTrainState s{model_from_archive(a), nn::Adam(), a.metadata.at("epoch").get<int>(), {}};
  nn::TensorMap adam;
  for (const auto& [k, t] : a.with_prefix("adam.")) adam.emplace("adam." + k, t);
  s.adam.load_state(adam);
  for (const auto& e : a.metadata.value("log", nlohmann::json::array()))
    s.log.push_back({e.at("epoch"), e.at("lr"), e.at("loss"), e.at("flow"), e.at("semantic"), e.at("kl")});
  return s;
}

dynamics::DynamicsModel load_dynamics_model(const std::filesystem::path& path) {
  const nn::Archive a = nn::load_archive(path);
  if (a.metadata.contains("dynamics_config")) {
    nn::Archive sub;
    sub.metadata = {{"config", a.metadata.at("dynamics_config")}};
    sub.arrays = a.arrays;
    return model_from_archive(sub);
  }
  return model_from_archive(a);
}

}  // namespace sadm::harness
