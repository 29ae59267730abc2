#pragma once

#include <cstdint>

#include <json.hpp>

namespace sadm::inpaint {

/// (lambda, gamma, eta): perceptual, frame-adversarial and clip-adversarial weights.
struct InpaintLossWeights {
  double lambda = 2.0;
  double gamma = 2.0;
  double eta = 1.0;
  void validate() const;
};

struct InpaintConfig {
  int num_classes = 3;
  /// Channels of the first U-Net stage; doubled per stage, capped at 4x.
  int base_width = 8;
  /// Encoder / decoder stages.
  int depth = 4;
  int disc_width = 8;
  /// Fixed random feature pyramid standing in for a pretrained perceptual network.
  int perceptual_scales = 3;
  int perceptual_width = 8;
  std::uint64_t perceptual_seed = 0x5eed;
  /// Feed the semantic condition to the generator and discriminators.
  bool use_condition = true;
  InpaintLossWeights weights;

  void validate() const;
};

nlohmann::json to_json(const InpaintConfig& c);
InpaintConfig inpaint_config_from_json(const nlohmann::json& j);

}  // namespace sadm::inpaint
