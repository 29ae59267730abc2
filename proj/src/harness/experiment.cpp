#include "sadm/harness/experiment.hpp"

#include <sstream>

#include "sadm/core/error.hpp"
#include "sadm/synthworld/dataset.hpp"

namespace sadm::harness {

std::vector<synthworld::OracleClip> make_split(const ExperimentConfig& cfg, const std::string& split) {
  if (split == "train") return synthworld::make_clips(cfg.world, cfg.train_clips, synthworld::kTrainStream);
  if (split == "val") return synthworld::make_clips(cfg.world, cfg.test_clips, synthworld::kValStream);
  if (split == "test") return synthworld::make_clips(cfg.world, cfg.test_clips, synthworld::kTestStream);
  throw ConfigError("unknown split '" + split + "'");
}

std::vector<core::Clip> plain_clips(const std::vector<synthworld::OracleClip>& clips) {
  std::vector<core::Clip> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.push_back(c.clip);
  return out;
}

void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.world.seed = seed;
  cfg.train.seed = seed;
  cfg.train_inpaint.seed = seed;
}

DynamicsTrainState fit_dynamics(const dynamics::DynamicsConfig& model, const TrainConfig& train,
                                const std::vector<core::Clip>& data, const TrainHooks& hooks) {
  DynamicsTrainState state{dynamics::DynamicsModel(model, train.seed), nn::Adam(), 0, {}};
  train_dynamics(train, state, data, hooks);
  return state;
}

nlohmann::json to_json(const ModelResult& m) {
  return {{"label", m.label}, {"parameters", m.parameters}, {"hidden", m.hidden}, {"report", to_json(m.report)}};
}

namespace {

nlohmann::json deltas(const EvalReport& a, const EvalReport& b) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < a.steps.size() && i < b.steps.size(); ++i)
    out.push_back({{"step", a.steps[i].step},
                   {"miou", a.steps[i].miou - b.steps[i].miou},
                   {"epe", a.steps[i].epe - b.steps[i].epe},
                   {"boundary_epe", a.steps[i].boundary_epe - b.steps[i].boundary_epe}});
  return out;
}

ModelResult train_and_score(const std::string& label, const dynamics::DynamicsConfig& model, const TrainConfig& train,
                            const std::vector<core::Clip>& data, const std::vector<core::Clip>& test,
                            const std::function<void(const std::string&, const EpochLog&)>& on_epoch) {
  TrainHooks hooks;
  if (on_epoch) hooks.on_epoch = [&](const EpochLog& e) { on_epoch(label, e); };
  const auto state = fit_dynamics(model, train, data, hooks);
  return {label, state.model.params().count(), model.hidden, evaluate(state.model, nullptr, test)};
}

}  // namespace

nlohmann::json to_json(const SingleClassReport& r) {
  return {{"semantic_aware", to_json(r.semantic_aware)},
          {"single_class", to_json(r.single_class)},
          {"delta", deltas(r.semantic_aware.report, r.single_class.report)}};
}

SingleClassReport ablate_single_class(const ExperimentConfig& cfg, const std::vector<core::Clip>& train,
                                      const std::vector<core::Clip>& test,
                                      const std::function<void(const std::string&, const EpochLog&)>& on_epoch) {
  dynamics::DynamicsConfig sadm = cfg.dynamics;
  sadm.architecture = dynamics::Architecture::kSemanticAware;
  SingleClassReport r;
  r.semantic_aware = train_and_score("semantic-aware", sadm, cfg.train, train, test, on_epoch);
  r.single_class = train_and_score("single-class", matched_baseline(sadm), cfg.train, train, test, on_epoch);
  return r;
}

nlohmann::json to_json(const SwapReport& r) {
  nlohmann::json clips = nlohmann::json::array();
  for (const auto& c : r.clips) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : c.segments)
      segs.push_back({{"branch", s.group + 1},
                      {"source", s.source + 1},
                      {"evaluable", s.evaluable},
                      {"predicted", s.predicted},
                      {"branch_law", s.group_law},
                      {"source_law", s.source_law},
                      {"follows_branch", s.follows_group}});
    clips.push_back({{"segments", segs}, {"success", c.success}});
  }
  return {{"classes", {r.a + 1, r.b + 1}}, {"success_rate", r.success_rate()}, {"clips", clips}};
}

nlohmann::json to_json(const ClassCountReport& r) {
  nlohmann::json merge = nlohmann::json::array();
  for (int m : r.merge) merge.push_back(m + 1);
  return {{"merge", merge}, {"original", to_json(r.original)}, {"merged", to_json(r.merged)}};
}

ClassCountReport ablate_class_count(const ExperimentConfig& cfg, const std::vector<int>& merge,
                                    const std::vector<core::Clip>& train, const std::vector<core::Clip>& test,
                                    const std::function<void(const std::string&, const EpochLog&)>& on_epoch) {
  validate_merge_map(merge, cfg.dynamics.num_classes);
  ClassCountReport r;
  r.merge = merge;
  r.original = train_and_score("C=" + std::to_string(cfg.dynamics.num_classes), cfg.dynamics, cfg.train, train, test, on_epoch);
  std::vector<core::Clip> mtrain, mtest;
  for (const auto& c : train) mtrain.push_back(merge_classes(c, merge));
  for (const auto& c : test) mtest.push_back(merge_classes(c, merge));
  dynamics::DynamicsConfig merged = cfg.dynamics;
  merged.num_classes = merged_class_count(merge);
  r.merged = train_and_score("C=" + std::to_string(merged.num_classes), merged, cfg.train, mtrain, mtest, on_epoch);
  return r;
}

std::vector<int> parse_merge_map(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw ConfigError("");
      out.push_back(v - 1);
    } catch (const std::exception&) {
      throw ConfigError("merge map entries must be positive class ids, got '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty merge map");
  return out;
}

}  // namespace sadm::harness
