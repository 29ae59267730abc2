#include "sadm/harness/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "sadm/core/error.hpp"
#include "sadm/synthworld/world.hpp"

namespace sadm::harness {

namespace {

core::Clip observed_prefix(const core::Clip& clip) {
  core::Clip past;
  const int t = clip.observed_len;
  past.frames.assign(clip.frames.begin(), clip.frames.begin() + t);
  past.flows.assign(clip.flows.begin(), clip.flows.begin() + t);
  past.maps.assign(clip.maps.begin(), clip.maps.begin() + t);
  past.observed_len = t;
  past.horizon = clip.horizon;
  return past;
}

Tensor clamp01(Tensor t) {
  for (double& v : t.storage()) v = std::clamp(v, 0.0, 1.0);
  return t;
}

}  // namespace

std::vector<PipelineStep> run_pipeline(const dynamics::DynamicsModel& dyn, const inpaint::InpaintModel* inp,
                                       const core::Clip& past, int horizon, const PipelineOptions& opts) {
  if (past.observed_len < 1 || past.length() < past.observed_len) throw ContractError("run_pipeline needs observed frames");
  const auto pred = dynamics::predict_sequence(dyn, observed_prefix(past), horizon, opts.mode, opts.seed, opts.route);
  std::optional<inpaint::InpaintPass> pass;
  if (inp) pass.emplace(*inp, false, false);

  std::vector<PipelineStep> steps;
  core::Frame prev = past.frames[static_cast<std::size_t>(past.observed_len - 1)];
  core::SemanticMap prev_map = past.maps[static_cast<std::size_t>(past.observed_len - 1)];
  for (int k = 0; k < horizon; ++k) {
    PipelineStep s;
    s.map = pred.maps[static_cast<std::size_t>(k)];
    s.flow = pred.flows[static_cast<std::size_t>(k)];
    const core::SemanticMap hard = s.map.argmax();
    s.warped = warp::warp_frame(prev, s.flow);
    s.warped.timestamp = past.observed_len + k;
    s.mask = warp::detect_disocclusion(hard, prev_map, s.flow, opts.detection);
    if (pass) {
      const auto in = inpaint::make_input(s.warped, s.mask, s.map);
      s.output = core::Frame(clamp01(pass->generate(in).value()), s.warped.timestamp);
    } else {
      s.output = s.warped;
    }
    prev = s.output;
    prev_map = hard;
    steps.push_back(std::move(s));
  }
  return steps;
}

nlohmann::json to_json(const InpaintEpochLog& e) {
  return {{"epoch", e.epoch},         {"lr", e.lr},
          {"generator", e.generator}, {"reconstruction", e.reconstruction},
          {"perceptual", e.perceptual}, {"adv_frame", e.adv_frame},
          {"adv_clip", e.adv_clip},   {"discriminator", e.discriminator}};
}

void train_inpaint(const TrainConfig& config, const dynamics::DynamicsModel& dyn, InpaintTrainState& state,
                   const std::vector<core::Clip>& data, const InpaintTrainHooks& hooks) {
  config.validate();
  if (data.empty()) throw ConfigError("train_inpaint: empty dataset");
  const inpaint::InpaintLossWeights weights{config.lambda, config.gamma, config.eta};
  weights.validate();

  // The dynamics model is frozen, so its predictions are fixed for the whole stage.
  std::vector<dynamics::SequencePrediction> cache;
  cache.reserve(data.size());
  for (const auto& clip : data)
    cache.push_back(dynamics::predict_sequence(dyn, observed_prefix(clip), clip.horizon, dynamics::Mode::kDeterministic));

  const int last = hooks.max_epochs < 0 ? config.epochs : std::min(config.epochs, state.epoch + hooks.max_epochs);
  for (; state.epoch < last; ++state.epoch) {
    const int epoch = state.epoch;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(synthworld::derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    InpaintEpochLog log;
    log.epoch = epoch;
    log.lr = config.lr_at(epoch);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double share = 1.0 / static_cast<double>(end - start);
      nn::TensorMap gen_grads, disc_grads;
      for (std::size_t b = start; b < end; ++b) {
        const core::Clip& clip = data[order[b]];
        const auto& pred = cache[order[b]];
        const int t0 = clip.observed_len;

        inpaint::InpaintPass gpass(state.model, true, false);
        std::vector<nn::Var> out;
        std::vector<inpaint::InpaintInput> inputs;
        std::vector<Tensor> real;
        core::Frame prev = clip.frames[static_cast<std::size_t>(t0 - 1)];
        core::SemanticMap prev_map = clip.maps[static_cast<std::size_t>(t0 - 1)];
        for (int k = 0; k < clip.horizon; ++k) {
          const auto& map = pred.maps[static_cast<std::size_t>(k)];
          const auto& flow = pred.flows[static_cast<std::size_t>(k)];
          const core::SemanticMap hard = map.argmax();
          const core::Frame warped = warp::warp_frame(prev, flow);
          inputs.push_back(inpaint::make_input(warped, warp::detect_disocclusion(hard, prev_map, flow), map));
          out.push_back(gpass.generate(inputs.back()));
          real.push_back(clip.frames[static_cast<std::size_t>(t0 + k)].pixels);
          prev = core::Frame(clamp01(out.back().value()));
          prev_map = hard;
        }
        const auto loss = inpaint::loss_inpaint(gpass, out, inputs, real, weights);
        nn::backward(loss.total);
        nn::accumulate(gen_grads, gpass.generator_binding().gradients(), share);

        inpaint::InpaintPass dpass(state.model, false, true);
        const nn::Var dloss = inpaint::loss_discriminators(dpass, out, inputs, real);
        nn::backward(dloss);
        nn::accumulate(disc_grads, dpass.discriminator_binding().gradients(), share);

        log.generator += loss.total.item();
        log.reconstruction += loss.reconstruction.item();
        log.perceptual += loss.perceptual.item();
        log.adv_frame += loss.adv_frame.item();
        log.adv_clip += loss.adv_clip.item();
        log.discriminator += dloss.item();
      }
      state.generator_adam.step(state.model.params(), gen_grads, log.lr);
      state.discriminator_adam.step(state.model.params(), disc_grads, log.lr);
    }
    const double n = static_cast<double>(data.size());
    for (double* v : {&log.generator, &log.reconstruction, &log.perceptual, &log.adv_frame, &log.adv_clip, &log.discriminator})
      *v /= n;
    state.log.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    if (!hooks.checkpoint.empty() && config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
      InpaintTrainState snapshot = state;
      snapshot.epoch = epoch + 1;
      save_inpaint(hooks.checkpoint, dyn, snapshot, config);
    }
  }
  if (!hooks.checkpoint.empty()) save_inpaint(hooks.checkpoint, dyn, state, config);
}

nn::Archive inpaint_archive(const dynamics::DynamicsModel& dyn, const InpaintTrainState& state, const TrainConfig& config) {
  nn::Archive a;
  a.insert("", dyn.params().entries());
  a.insert("", state.model.params().entries());
  a.insert("gen.", state.generator_adam.state());
  a.insert("disc.", state.discriminator_adam.state());
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : state.log) log.push_back(to_json(e));
  a.metadata = {{"stage", "inpaint"},
                {"epoch", state.epoch},
                {"seed", config.seed},
                {"config", inpaint::to_json(state.model.config())},
                {"dynamics_config", dynamics::to_json(dyn.config())},
                {"train", to_json(config)},
                {"log", log}};
  return a;
}

void save_inpaint(const std::filesystem::path& path, const dynamics::DynamicsModel& dyn, const InpaintTrainState& state,
                  const TrainConfig& config) {
  nn::save_archive(path, inpaint_archive(dyn, state, config));
}

InpaintTrainState load_inpaint(const std::filesystem::path& path) {
  const nn::Archive a = nn::load_archive(path);
  if (a.metadata.value("stage", "") != "inpaint") throw ConfigError(path.string() + " is not an inpainting checkpoint");
  nn::ParamStore params;
  for (const auto& [k, t] : a.with_prefix("inpaint.")) params.add("inpaint." + k, t);
  InpaintTrainState s{inpaint::InpaintModel(inpaint::inpaint_config_from_json(a.metadata.at("config")), std::move(params)),
                      nn::Adam(), nn::Adam(), a.metadata.at("epoch").get<int>(), {}};
  nn::TensorMap gen, disc;
  for (const auto& [k, t] : a.with_prefix("gen.")) gen.emplace(k, t);
  for (const auto& [k, t] : a.with_prefix("disc.")) disc.emplace(k, t);
  s.generator_adam.load_state(gen);
  s.discriminator_adam.load_state(disc);
  for (const auto& e : a.metadata.value("log", nlohmann::json::array()))
    s.log.push_back({e.at("epoch"), e.at("lr"), e.at("generator"), e.at("reconstruction"), e.at("perceptual"),
                     e.at("adv_frame"), e.at("adv_clip"), e.at("discriminator")});
  return s;
}

}  // namespace sadm::harness
