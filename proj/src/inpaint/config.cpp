#include "sadm/inpaint/config.hpp"

#include "sadm/core/error.hpp"

namespace sadm::inpaint {

void InpaintLossWeights::validate() const {
  if (lambda < 0.0 || gamma < 0.0 || eta < 0.0) throw ConfigError("inpainting loss weights must be non-negative");
}

void InpaintConfig::validate() const {
  if (num_classes < 1 || base_width < 1 || depth < 1 || disc_width < 1) throw ConfigError("bad inpainting network size");
  if (perceptual_scales < 1 || perceptual_width < 1) throw ConfigError("bad perceptual pyramid size");
  weights.validate();
}

nlohmann::json to_json(const InpaintConfig& c) {
  return {{"num_classes", c.num_classes},
          {"base_width", c.base_width},
          {"depth", c.depth},
          {"disc_width", c.disc_width},
          {"perceptual_scales", c.perceptual_scales},
          {"perceptual_width", c.perceptual_width},
          {"perceptual_seed", c.perceptual_seed},
          {"use_condition", c.use_condition},
          {"lambda", c.weights.lambda},
          {"gamma", c.weights.gamma},
          {"eta", c.weights.eta}};
}

InpaintConfig inpaint_config_from_json(const nlohmann::json& j) {
  InpaintConfig c;
  try {
    c.num_classes = j.value("num_classes", c.num_classes);
    c.base_width = j.value("base_width", c.base_width);
    c.depth = j.value("depth", c.depth);
    c.disc_width = j.value("disc_width", c.disc_width);
    c.perceptual_scales = j.value("perceptual_scales", c.perceptual_scales);
    c.perceptual_width = j.value("perceptual_width", c.perceptual_width);
    c.perceptual_seed = j.value("perceptual_seed", c.perceptual_seed);
    c.use_condition = j.value("use_condition", c.use_condition);
    c.weights.lambda = j.value("lambda", c.weights.lambda);
    c.weights.gamma = j.value("gamma", c.weights.gamma);
    c.weights.eta = j.value("eta", c.weights.eta);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("inpaint config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace sadm::inpaint
