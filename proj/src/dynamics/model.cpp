#include "sadm/dynamics/model.hpp"

#include <algorithm>
#include <numeric>

#include "sadm/core/error.hpp"
#include "sadm/core/ops.hpp"

namespace sadm::dynamics {
namespace {

constexpr double kInitScale = 0.05;

nn::ConvSpec same3(int groups) { return nn::ConvSpec{1, 1, groups, 1, 0}; }

void add_lstm_bias(nn::ParamStore& store, const std::string& name, int groups, int hidden) {
  Tensor b({groups * 4 * hidden});
  for (int g = 0; g < groups; ++g)
    for (int k = 0; k < hidden; ++k) b[static_cast<std::size_t>(g * 4 * hidden + hidden + k)] = 1.0;  // forget gate
  store.add(name, std::move(b));
}

nn::ParamStore build_params(const DynamicsConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  nn::Initializer init(seed);
  nn::ParamStore s;
  const int g = cfg.groups(), hd = cfg.hidden, cg = cfg.group_inputs(), dc = cfg.context_width;
  const int f = cfg.fusion_width, c = cfg.num_classes, m = cfg.group_masks();
  auto w = [&](const std::string& name, Shape shape) { s.add("dynamics." + name, init.uniform(std::move(shape), kInitScale)); };
  auto zero = [&](const std::string& name, int n) { s.add("dynamics." + name, Tensor({n})); };

  w("enc.wx", {4 * g * hd, cg, 3, 3});
  w("enc.wh", {4 * g * hd, hd, 3, 3});
  add_lstm_bias(s, "dynamics.enc.b", g, hd);
  w("dec.wh", {4 * g * hd, hd, 3, 3});
  add_lstm_bias(s, "dynamics.dec.b", g, hd);

  w("ctx.w1", {g * dc, g * hd});
  zero("ctx.b1", g * dc);
  w("ctx.w2", {g * dc, dc, 1, 1});
  zero("ctx.b2", g * dc);
  w("ctx.wg", {4 * g * hd, dc, 1, 1});
  zero("ctx.bg", 4 * g * hd);

  w("head.wm", {g * m, hd, 3, 3});
  zero("head.bm", g * m);
  w("head.wf", {2 * g, hd, 3, 3});
  zero("head.bf", 2 * g);

  w("fuse.w1", {f, c, 3, 3});
  zero("fuse.b1", f);
  w("fuse.w2", {f, f, 3, 3});
  zero("fuse.b2", f);
  w("fuse.w3", {c, f, 3, 3});
  zero("fuse.b3", c);

  if (cfg.stochastic) {
    w("post.wxu", {g * hd, cg, 3, 3});
    w("post.wuu", {g * hd, hd, 3, 3});
    zero("post.bu", g * hd);
    w("post.wxv", {g * hd, cg, 3, 3});
    w("post.wvv", {g * hd, hd, 3, 3});
    zero("post.bv", g * hd);
  }
  return s;
}

}  // namespace

DynamicsModel::DynamicsModel(DynamicsConfig cfg, std::uint64_t seed) : cfg_(cfg), params_(build_params(cfg, seed)) {}

DynamicsModel::DynamicsModel(DynamicsConfig cfg, nn::ParamStore params) : cfg_(cfg), params_(std::move(params)) {
  const nn::ParamStore reference = build_params(cfg_, 0);
  for (const auto& [name, t] : reference.entries()) {
    if (!params_.contains(name)) throw ConfigError("checkpoint lacks " + name);
    if (params_.get(name).shape() != t.shape())
      throw ConfigError(name + ": shape " + to_string(params_.get(name).shape()) + " does not match config " + to_string(t.shape()));
  }
  for (const auto& name : params_.names())
    if (!reference.contains(name)) throw ConfigError("unexpected parameter " + name);
}

DynamicsPass::DynamicsPass(const DynamicsModel& model, bool trainable, std::vector<int> route)
    : cfg_(model.config()), owned_(std::in_place, model.params(), trainable), bind_(&*owned_), route_(std::move(route)) {
  init_route();
}

DynamicsPass::DynamicsPass(const DynamicsConfig& cfg, nn::Binding& binding, std::vector<int> route)
    : cfg_(cfg), bind_(&binding), route_(std::move(route)) {
  init_route();
}

void DynamicsPass::init_route() {
  const int g = cfg_.groups();
  if (route_.empty()) {
    route_.resize(static_cast<std::size_t>(g));
    std::iota(route_.begin(), route_.end(), 0);
  }
  std::vector<int> sorted = route_;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> identity(static_cast<std::size_t>(g));
  std::iota(identity.begin(), identity.end(), 0);
  if (sorted != identity) throw ConfigError("route must be a permutation of the group indices");
}

nn::Var DynamicsPass::p(const char* name) { return (*bind_)(std::string("dynamics.") + name); }

nn::Var DynamicsPass::encoder_input(const core::ClassDecomposition& d) const {
  const int c = cfg_.num_classes;
  if (d.num_classes() != c)
    throw ShapeError("encoder_input: " + std::to_string(d.num_classes()) + " classes, config has " + std::to_string(c));
  const int h = d.masks.front().dim(0), w = d.masks.front().dim(1);
  if (h % cfg_.downsample || w % cfg_.downsample) throw ShapeError("frame size must be divisible by the downsample factor");
  const double inv = 1.0 / cfg_.flow_norm;
  std::vector<Tensor> parts;
  if (cfg_.architecture == Architecture::kSemanticAware) {
    for (int slot : route_) {
      const auto k = static_cast<std::size_t>(slot);
      parts.push_back(d.masks[k].reshaped({1, h, w}));
      parts.push_back(d.masked_flows[k] * inv);
    }
  } else {
    Tensor flow({2, h, w});
    for (int k = 0; k < c; ++k) {
      parts.push_back(d.masks[static_cast<std::size_t>(k)].reshaped({1, h, w}));
      flow += d.masked_flows[static_cast<std::size_t>(k)];
    }
    parts.push_back(flow * inv);
  }
  return nn::avg_pool(nn::Var::constant(Tensor::concat0(parts)), cfg_.downsample);
}

RecurrentState DynamicsPass::zero_state(int height, int width) const {
  const Shape s{cfg_.groups() * cfg_.hidden, height / cfg_.downsample, width / cfg_.downsample};
  return {nn::Var::constant(Tensor(s)), nn::Var::constant(Tensor(s))};
}

RecurrentState DynamicsPass::encode_step(const nn::Var& input, const RecurrentState& prev) {
  const int g = cfg_.groups();
  if (input.dim(0) != g * cfg_.group_inputs()) throw ShapeError("encode_step: input channel count does not match config");
  const nn::Var gates = nn::add(nn::conv2d(input, p("enc.wx"), p("enc.b"), same3(g)), nn::conv2d(prev.h, p("enc.wh"), {}, same3(g)));
  const nn::Var c = nn::lstm_cell_state(gates, prev.c, g);
  return {nn::lstm_hidden(gates, c, g), c};
}

nn::Var DynamicsPass::context_summary(const RecurrentState& states) {
  const int g = cfg_.groups(), dc = cfg_.context_width;
  const nn::Var pooled = nn::spatial_mean(states.h);
  const nn::Var a = nn::tanh(nn::linear(pooled, p("ctx.w1"), p("ctx.b1")));
  const nn::Var ctx = nn::conv2d(nn::reshape(a, {g * dc, 1, 1}), p("ctx.w2"), p("ctx.b2"), nn::ConvSpec{1, 0, g, 1, 0});
  return nn::reshape(ctx, {g * dc});
}

nn::Var DynamicsPass::context_gates(const nn::Var& context) {
  const int g = cfg_.groups();
  const nn::Var x = nn::reshape(context, {context.dim(0), 1, 1});
  const nn::Var gates = nn::conv2d(x, p("ctx.wg"), p("ctx.bg"), nn::ConvSpec{1, 0, g, 1, 0});
  return nn::reshape(gates, {4 * g * cfg_.hidden});
}

DecoderStep DynamicsPass::decode_step(const RecurrentState& prev, const nn::Var& gate_offsets) {
  const int g = cfg_.groups();
  const nn::Var gates = nn::add_channel_bias(nn::conv2d(prev.h, p("dec.wh"), {}, same3(g)), nn::add(p("dec.b"), gate_offsets));
  const nn::Var c = nn::lstm_cell_state(gates, prev.c, g);
  const nn::Var h = nn::lstm_hidden(gates, c, g);
  DecoderStep out;
  out.state = {h, c};
  out.embedding = h;
  out.mask_logits = nn::upsample_bilinear(nn::conv2d(h, p("head.wm"), p("head.bm"), same3(g)), cfg_.downsample);
  out.flow = nn::scale(nn::upsample_bilinear(nn::conv2d(h, p("head.wf"), p("head.bf"), same3(g)), cfg_.downsample), cfg_.flow_norm);
  return out;
}

nn::Var DynamicsPass::fuse_masks(const nn::Var& logits) {
  if (logits.dim(0) != cfg_.num_classes) throw ShapeError("fuse_masks: logit channel count does not match config");
  nn::Var a = nn::tanh(nn::conv2d(logits, p("fuse.w1"), p("fuse.b1"), same3(1)));
  a = nn::tanh(nn::conv2d(a, p("fuse.w2"), p("fuse.b2"), same3(1)));
  return nn::softmax0(nn::add(logits, nn::conv2d(a, p("fuse.w3"), p("fuse.b3"), same3(1))));
}

nn::Var DynamicsPass::fuse_flows(const nn::Var& probs, const nn::Var& class_flows) const {
  if (cfg_.architecture == Architecture::kSingleClass) return class_flows;
  return nn::fuse_flows(probs, class_flows);
}

PosteriorState DynamicsPass::posterior_init(const RecurrentState& encoded) const {
  return {encoded.h, nn::Var::constant(Tensor(encoded.h.shape(), 1.0))};
}

PosteriorState DynamicsPass::posterior_step(const nn::Var& input, const PosteriorState& prev, Phase phase) {
  if (phase != Phase::kTrain) throw ContractError("posterior_step: the posterior is only available during training");
  if (!cfg_.stochastic) throw ContractError("posterior_step: model was configured without a posterior");
  const int g = cfg_.groups();
  const nn::Var u = nn::tanh(nn::add(nn::conv2d(input, p("post.wxu"), p("post.bu"), same3(g)), nn::conv2d(prev.mean, p("post.wuu"), {}, same3(g))));
  const nn::Var v = nn::softplus(nn::add(nn::conv2d(input, p("post.wxv"), p("post.bv"), same3(g)), nn::conv2d(prev.variance, p("post.wvv"), {}, same3(g))));
  return {u, v};
}

Rollout DynamicsPass::run(const core::Clip& clip, int horizon, Mode mode, Phase phase, std::mt19937_64* noise) {
  const int t_obs = clip.observed_len;
  if (t_obs < 1 || static_cast<int>(clip.maps.size()) < t_obs || static_cast<int>(clip.flows.size()) < t_obs)
    throw ShapeError("run: clip has fewer observed frames than observed_len");
  if (horizon < 1) throw ContractError("run: horizon must be positive");
  const int h = clip.maps.front().height(), w = clip.maps.front().width();

  Rollout out;
  RecurrentState state = zero_state(h, w);
  for (int t = 0; t < t_obs; ++t) {
    const auto i = static_cast<std::size_t>(t);
    state = encode_step(encoder_input(core::decompose(clip.maps[i], clip.flows[i])), state);
  }
  out.encoded = state;

  if (mode == Mode::kStochastic) {
    if (!noise) throw ContractError("run: stochastic mode needs a noise source");
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor eps(state.h.shape());
    for (double& e : eps.storage()) e = normal(*noise);
    if (phase == Phase::kTrain) {
      if (static_cast<int>(clip.maps.size()) < t_obs + horizon) throw ShapeError("run: posterior needs the ground-truth future");
      PosteriorState z = posterior_init(state);
      for (int t = t_obs; t < t_obs + horizon; ++t) {
        const auto i = static_cast<std::size_t>(t);
        z = posterior_step(encoder_input(core::decompose(clip.maps[i], clip.flows[i])), z, phase);
      }
      out.posterior = z;
      state.h = nn::add(state.h, nn::add(z.mean, nn::mul(nn::sqrt(z.variance), nn::Var::constant(eps))));
    } else {
      state.h = nn::add(state.h, nn::Var::constant(eps));
    }
  }

  const nn::Var gates = context_gates(context_summary(state));
  for (int k = 0; k < horizon; ++k) {
    const DecoderStep step = decode_step(state, gates);
    state = step.state;
    const nn::Var probs = fuse_masks(step.mask_logits);
    out.logits.push_back(step.mask_logits);
    out.probs.push_back(probs);
    out.class_flows.push_back(step.flow);
    out.flows.push_back(fuse_flows(probs, step.flow));
  }
  return out;
}

SequencePrediction predict_sequence(const DynamicsModel& model, const core::Clip& past, int horizon, Mode mode,
                                    std::uint64_t seed, std::vector<int> route) {
  DynamicsPass pass(model, false, std::move(route));
  std::mt19937_64 rng(seed);
  const Rollout r = pass.run(past, horizon, mode, Phase::kTest, &rng);
  SequencePrediction out;
  for (std::size_t k = 0; k < r.probs.size(); ++k) {
    out.maps.emplace_back(r.probs[k].value());
    out.flows.emplace_back(r.flows[k].value());
    out.class_flows.push_back(r.class_flows[k].value());
  }
  return out;
}

}  // namespace sadm::dynamics
