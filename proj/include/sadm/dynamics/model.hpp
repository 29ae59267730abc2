#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sadm/core/types.hpp"
#include "sadm/dynamics/config.hpp"
#include "sadm/nn/ops.hpp"
#include "sadm/nn/params.hpp"

namespace sadm::dynamics {

/// ConvLSTM state [G*hidden, h, w] at the pooled resolution, one channel block per group.
struct RecurrentState {
  nn::Var h;
  nn::Var c;
};
using EncoderStateSet = RecurrentState;

struct DecoderStep {
  RecurrentState state;
  nn::Var embedding;    // the decoder hidden state
  nn::Var mask_logits;  // [C, H, W], full resolution
  nn::Var flow;         // [2G, H, W] in pixels, two channels per group
};

/// Per-class diagonal Gaussian over the recurrent state, [G*hidden, h, w] each.
struct PosteriorState {
  nn::Var mean;
  nn::Var variance;
};

enum class Mode { kDeterministic, kStochastic };
enum class Phase { kTrain, kTest };

/// Parameters and configuration. All keys start with "dynamics.".
class DynamicsModel {
 public:
  DynamicsModel(DynamicsConfig cfg, std::uint64_t seed);
  /// Adopts loaded parameters; throws ConfigError when names or shapes disagree with `cfg`.
  DynamicsModel(DynamicsConfig cfg, nn::ParamStore params);

  const DynamicsConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

 private:
  DynamicsConfig cfg_;
  nn::ParamStore params_;
};

/// Output of one encode / decode rollout. Index k is horizon step t+k+1.
struct Rollout {
  std::vector<nn::Var> logits;       // [C, H, W]
  std::vector<nn::Var> probs;        // [C, H, W], fused
  std::vector<nn::Var> flows;        // [2, H, W], fused
  std::vector<nn::Var> class_flows;  // [2G, H, W]
  PosteriorState posterior;          // stochastic training only
  RecurrentState encoded;            // h^T, c^T
};

/// One forward graph over a model. With `trainable` the parameters become gradient leaves.
///
/// `route[s]` names the class whose inputs feed group s (semantic-aware model only). The
/// default is the identity; swapping two entries hands one class's segments to the other
/// class's recurrence.
class DynamicsPass {
 public:
  DynamicsPass(const DynamicsModel& model, bool trainable, std::vector<int> route = {});
  /// Fetches parameters through a caller-owned binding, which must outlive the pass.
  DynamicsPass(const DynamicsConfig& cfg, nn::Binding& binding, std::vector<int> route = {});
  DynamicsPass(const DynamicsPass&) = delete;
  DynamicsPass& operator=(const DynamicsPass&) = delete;

  /// Pooled, normalized network input [G*group_inputs, h, w] for one observed frame.
  nn::Var encoder_input(const core::ClassDecomposition& d) const;
  RecurrentState zero_state(int height, int width) const;

  RecurrentState encode_step(const nn::Var& input, const RecurrentState& prev);
  /// Per-class context vectors [G*context_width]; every class sees every class's pooled state.
  nn::Var context_summary(const RecurrentState& states);
  /// Gate offsets [G*4*hidden] that the context adds to every decoder step.
  nn::Var context_gates(const nn::Var& context);
  DecoderStep decode_step(const RecurrentState& prev, const nn::Var& gate_offsets);
  /// Fusion network plus softmax: [C, H, W] logits -> probabilities.
  nn::Var fuse_masks(const nn::Var& logits);
  /// Fused flow [2, H, W] from probabilities and group flows.
  nn::Var fuse_flows(const nn::Var& probs, const nn::Var& class_flows) const;

  /// z^T = (h^T, 1).
  PosteriorState posterior_init(const RecurrentState& encoded) const;
  /// Throws ContractError in the test phase.
  PosteriorState posterior_step(const nn::Var& input, const PosteriorState& prev, Phase phase);

  /// Encodes the first T frames of `clip` and decodes `horizon` steps. Stochastic training runs
  /// the posterior over the ground-truth future frames T..T+horizon-1, which must be present;
  /// stochastic test samples the prior. `noise` is required in stochastic mode.
  Rollout run(const core::Clip& clip, int horizon, Mode mode, Phase phase, std::mt19937_64* noise = nullptr);

  nn::Binding& binding() { return *bind_; }
  const DynamicsConfig& config() const { return cfg_; }

 private:
  nn::Var p(const char* name);

  void init_route();

  const DynamicsConfig& cfg_;
  std::optional<nn::Binding> owned_;
  nn::Binding* bind_;
  std::vector<int> route_;
};

struct SequencePrediction {
  std::vector<core::SoftSemanticMap> maps;
  std::vector<core::FlowField> flows;
  std::vector<Tensor> class_flows;  // [2G, H, W]
};

/// Inference: K future (soft map, flow) pairs from the observed prefix of `past`.
SequencePrediction predict_sequence(const DynamicsModel& model, const core::Clip& past, int horizon, Mode mode,
                                    std::uint64_t seed = 0, std::vector<int> route = {});

}  // namespace sadm::dynamics
