#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sadm/harness/ablation.hpp"
#include "sadm/harness/config.hpp"
#include "sadm/harness/evaluate.hpp"
#include "sadm/harness/train.hpp"

namespace sadm::harness {

/// Clips of one split, generated from the experiment's world spec.
std::vector<synthworld::OracleClip> make_split(const ExperimentConfig& cfg, const std::string& split);
std::vector<core::Clip> plain_clips(const std::vector<synthworld::OracleClip>& clips);

/// Overrides the world seed and both training seeds.
void apply_seed(ExperimentConfig& cfg, std::uint64_t seed);

/// Stage-1 training from scratch (model seed = config.train.seed).
DynamicsTrainState fit_dynamics(const dynamics::DynamicsConfig& model, const TrainConfig& train,
                                const std::vector<core::Clip>& data, const TrainHooks& hooks = {});

struct ModelResult {
  std::string label;
  std::size_t parameters = 0;
  int hidden = 0;
  EvalReport report;
};

nlohmann::json to_json(const ModelResult& m);

struct SingleClassReport {
  ModelResult semantic_aware;
  ModelResult single_class;
};

nlohmann::json to_json(const SingleClassReport& r);

/// Trains the configured semantic-aware model and the matched single-class baseline on the same
/// data and evaluates both on warped frames (no inpainting). `on_epoch` receives the label.
SingleClassReport ablate_single_class(const ExperimentConfig& cfg, const std::vector<core::Clip>& train,
                                      const std::vector<core::Clip>& test,
                                      const std::function<void(const std::string&, const EpochLog&)>& on_epoch = {});

nlohmann::json to_json(const SwapReport& r);

struct ClassCountReport {
  std::vector<int> merge;
  ModelResult original;
  ModelResult merged;
};

nlohmann::json to_json(const ClassCountReport& r);

/// Same training recipe with the original classes and with classes merged by `merge`; each model
/// is scored against its own label set.
ClassCountReport ablate_class_count(const ExperimentConfig& cfg, const std::vector<int>& merge,
                                    const std::vector<core::Clip>& train, const std::vector<core::Clip>& test,
                                    const std::function<void(const std::string&, const EpochLog&)>& on_epoch = {});

/// Parses "1,2,2" (1-based class ids) into a 0-based merge map.
std::vector<int> parse_merge_map(const std::string& text);

}  // namespace sadm::harness
