#include "sadm/dynamics/losses.hpp"

#include "sadm/core/error.hpp"
#include "sadm/core/ops.hpp"

namespace sadm::dynamics {

nn::Var loss_flow(const std::vector<nn::Var>& pred, const std::vector<core::FlowField>& truth) {
  if (pred.size() != truth.size() || pred.empty()) throw ShapeError("loss_flow: horizon mismatch");
  nn::Var total;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const nn::Var term = nn::l1_sum(pred[k], nn::Var::constant(truth[k].vectors));
    total = total.defined() ? nn::add(total, term) : term;
  }
  return total;
}

nn::Var loss_semantic(const std::vector<nn::Var>& probs, const std::vector<core::SemanticMap>& truth,
                      const std::vector<core::BoundaryWeightMap>& weights, double eps) {
  if (probs.size() != truth.size() || probs.size() != weights.size() || probs.empty())
    throw ShapeError("loss_semantic: horizon mismatch");
  nn::Var total;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const nn::Var term = nn::weighted_cross_entropy(probs[k], truth[k], weights[k].weights, eps);
    total = total.defined() ? nn::add(total, term) : term;
  }
  return total;
}

nn::Var loss_kl(const PosteriorState& z) { return nn::kl_standard_normal(z.mean, z.variance); }

DynamicLoss loss_dynamic(const nn::Var& flow, const nn::Var& semantic, const nn::Var& kl, double beta) {
  DynamicLoss out{flow, semantic, kl, nn::add(flow, semantic)};
  if (kl.defined()) out.total = nn::add(out.total, nn::scale(kl, beta));
  return out;
}

double loss_dynamic(double flow, double semantic, double kl, double beta) { return flow + semantic + beta * kl; }

DynamicLoss clip_loss(DynamicsPass& pass, const core::Clip& clip, Mode mode, std::mt19937_64& noise) {
  const auto& cfg = pass.config();
  const int t_obs = clip.observed_len, k = clip.horizon;
  if (clip.length() != t_obs + k) throw ShapeError("clip_loss: clip length is not observed_len + horizon");
  const Rollout r = pass.run(clip, k, mode, Phase::kTrain, &noise);
  std::vector<core::FlowField> flows;
  std::vector<core::SemanticMap> maps;
  std::vector<core::BoundaryWeightMap> weights;
  for (int t = t_obs; t < t_obs + k; ++t) {
    const auto i = static_cast<std::size_t>(t);
    flows.push_back(clip.flows[i]);
    maps.push_back(clip.maps[i]);
    weights.push_back(core::boundary_weights(clip.maps[i], cfg.alpha, cfg.boundary_variance));
  }
  const nn::Var kl = mode == Mode::kStochastic ? loss_kl(r.posterior) : nn::Var();
  return loss_dynamic(loss_flow(r.flows, flows), loss_semantic(r.probs, maps, weights, cfg.ce_eps), kl, cfg.beta);
}

}  // namespace sadm::dynamics
