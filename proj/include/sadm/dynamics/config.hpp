#pragma once

#include <json.hpp>

namespace sadm::dynamics {

enum class Architecture {
  /// One recurrent group per class (grouped convolutions), late fusion of per-class outputs.
  kSemanticAware,
  /// One ungrouped recurrence over the concatenated masks and flow.
  kSingleClass,
};

struct DynamicsConfig {
  Architecture architecture = Architecture::kSemanticAware;
  int num_classes = 3;
  /// Recurrent channels per group (per class for the semantic-aware model).
  int hidden = 32;
  /// Spatial average-pooling factor in front of the recurrence.
  int downsample = 4;
  int observed_len = 5;
  int horizon = 5;
  /// Per-class context vector width.
  int context_width = 16;
  /// Hidden width of the fusion network.
  int fusion_width = 8;
  /// Flows are divided by this before entering the network and multiplied on the way out.
  double flow_norm = 4.0;
  double alpha = 5.0;
  double boundary_variance = 9.0;
  double beta = 0.1;
  double ce_eps = 1e-8;
  bool stochastic = false;

  int groups() const { return architecture == Architecture::kSemanticAware ? num_classes : 1; }
  /// Input channels per group: (mask, flow x, flow y) per class, or all masks plus flow.
  int group_inputs() const { return architecture == Architecture::kSemanticAware ? 3 : num_classes + 2; }
  /// Mask logits per group.
  int group_masks() const { return architecture == Architecture::kSemanticAware ? 1 : num_classes; }
  /// Throws ConfigError.
  void validate() const;
};

nlohmann::json to_json(const DynamicsConfig& cfg);
/// Missing keys keep their defaults.
DynamicsConfig dynamics_config_from_json(const nlohmann::json& j);

}  // namespace sadm::dynamics
