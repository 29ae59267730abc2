#pragma once

#include <random>
#include <vector>

#include "sadm/dynamics/model.hpp"

namespace sadm::dynamics {

/// Sum over the horizon of the elementwise L1 distance.
nn::Var loss_flow(const std::vector<nn::Var>& pred, const std::vector<core::FlowField>& truth);

/// Boundary-weighted cross-entropy summed over pixels and horizon; probabilities are floored at eps.
nn::Var loss_semantic(const std::vector<nn::Var>& probs, const std::vector<core::SemanticMap>& truth,
                      const std::vector<core::BoundaryWeightMap>& weights, double eps);

/// KL(N(u, v) || N(0, I)) summed over classes and dimensions.
nn::Var loss_kl(const PosteriorState& z);

struct DynamicLoss {
  nn::Var flow;
  nn::Var semantic;
  nn::Var kl;  // undefined in deterministic mode
  nn::Var total;
};

/// L_f + L_m + beta * L_kl; the KL term is dropped when `kl` is undefined.
DynamicLoss loss_dynamic(const nn::Var& flow, const nn::Var& semantic, const nn::Var& kl, double beta);
double loss_dynamic(double flow, double semantic, double kl, double beta);

/// Full training objective of one clip: rollout over the clip's horizon against its future frames.
DynamicLoss clip_loss(DynamicsPass& pass, const core::Clip& clip, Mode mode, std::mt19937_64& noise);

}  // namespace sadm::dynamics
