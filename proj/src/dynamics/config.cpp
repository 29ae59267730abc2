#include "sadm/dynamics/config.hpp"

#include "sadm/core/error.hpp"

namespace sadm::dynamics {

void DynamicsConfig::validate() const {
  if (num_classes < 1) throw ConfigError("num_classes must be positive");
  if (hidden < 1 || context_width < 1 || fusion_width < 1) throw ConfigError("layer widths must be positive");
  if (downsample < 1) throw ConfigError("downsample must be positive");
  if (observed_len < 1 || horizon < 1) throw ConfigError("observed_len and horizon must be positive");
  if (flow_norm <= 0.0 || alpha < 0.0 || boundary_variance <= 0.0 || beta < 0.0 || ce_eps <= 0.0)
    throw ConfigError("bad dynamics constants");
}

nlohmann::json to_json(const DynamicsConfig& c) {
  return {{"architecture", c.architecture == Architecture::kSemanticAware ? "semantic-aware" : "single-class"},
          {"num_classes", c.num_classes},
          {"hidden", c.hidden},
          {"downsample", c.downsample},
          {"observed_len", c.observed_len},
          {"horizon", c.horizon},
          {"context_width", c.context_width},
          {"fusion_width", c.fusion_width},
          {"flow_norm", c.flow_norm},
          {"alpha", c.alpha},
          {"boundary_variance", c.boundary_variance},
          {"beta", c.beta},
          {"ce_eps", c.ce_eps},
          {"stochastic", c.stochastic}};
}

DynamicsConfig dynamics_config_from_json(const nlohmann::json& j) {
  DynamicsConfig c;
  try {
    const std::string arch = j.value("architecture", "semantic-aware");
    if (arch == "semantic-aware") c.architecture = Architecture::kSemanticAware;
    else if (arch == "single-class") c.architecture = Architecture::kSingleClass;
    else throw ConfigError("unknown architecture '" + arch + "'");
    c.num_classes = j.value("num_classes", c.num_classes);
    c.hidden = j.value("hidden", c.hidden);
    c.downsample = j.value("downsample", c.downsample);
    c.observed_len = j.value("observed_len", c.observed_len);
    c.horizon = j.value("horizon", c.horizon);
    c.context_width = j.value("context_width", c.context_width);
    c.fusion_width = j.value("fusion_width", c.fusion_width);
    c.flow_norm = j.value("flow_norm", c.flow_norm);
    c.alpha = j.value("alpha", c.alpha);
    c.boundary_variance = j.value("boundary_variance", c.boundary_variance);
    c.beta = j.value("beta", c.beta);
    c.ce_eps = j.value("ce_eps", c.ce_eps);
    c.stochastic = j.value("stochastic", c.stochastic);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dynamics config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace sadm::dynamics
