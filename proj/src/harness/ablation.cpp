#include "sadm/harness/ablation.hpp"

#include <algorithm>
#include <cmath>

#include "sadm/core/error.hpp"

namespace sadm::harness {

dynamics::DynamicsConfig matched_baseline(const dynamics::DynamicsConfig& semantic_aware) {
  dynamics::DynamicsConfig cfg = semantic_aware;
  cfg.architecture = dynamics::Architecture::kSemanticAware;
  const std::size_t target = dynamics::DynamicsModel(cfg, 0).params().count();
  cfg.architecture = dynamics::Architecture::kSingleClass;
  for (cfg.hidden = 1;; ++cfg.hidden)
    if (dynamics::DynamicsModel(cfg, 0).params().count() >= target) return cfg;
}

std::vector<int> swap_route(int num_classes, int a, int b) {
  if (a < 0 || b < 0 || a >= num_classes || b >= num_classes) throw ConfigError("swap classes out of range");
  std::vector<int> route(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) route[static_cast<std::size_t>(c)] = c;
  std::swap(route[static_cast<std::size_t>(a)], route[static_cast<std::size_t>(b)]);
  return route;
}

double SwapReport::success_rate() const {
  if (clips.empty()) return 0.0;
  const auto ok = std::count_if(clips.begin(), clips.end(), [](const ClipSwap& c) { return c.success; });
  return static_cast<double>(ok) / static_cast<double>(clips.size());
}

namespace {

double distance(const std::array<double, 2>& p, const std::array<double, 2>& q) { return std::hypot(p[0] - q[0], p[1] - q[1]); }

}  // namespace

SwapReport class_swap(const dynamics::DynamicsModel& model, const std::vector<synthworld::OracleClip>& clips, int a, int b) {
  const auto& cfg = model.config();
  if (cfg.architecture != dynamics::Architecture::kSemanticAware) throw ConfigError("class swap needs per-class branches");
  if (a == b) throw ConfigError("class swap needs two different classes");
  const auto route = swap_route(cfg.num_classes, a, b);
  SwapReport report{a, b, {}};
  for (const auto& oc : clips) {
    const core::Clip& clip = oc.clip;
    const auto pred = dynamics::predict_sequence(model, clip, cfg.horizon, dynamics::Mode::kDeterministic, 0, route);
    ClipSwap result;
    for (int g : {a, b}) {
      SegmentSwap seg;
      seg.group = g;
      seg.source = route[static_cast<std::size_t>(g)];
      int steps = 0;
      for (int k = 0; k < cfg.horizon; ++k) {
        const auto labels = pred.maps[static_cast<std::size_t>(k)].argmax();
        const Tensor& flows = pred.class_flows[static_cast<std::size_t>(k)];
        double sx = 0.0, sy = 0.0;
        long n = 0;
        for (int y = 0; y < labels.height(); ++y)
          for (int x = 0; x < labels.width(); ++x)
            if (labels(y, x) == g) {
              sx += flows.at(2 * g, y, x);
              sy += flows.at(2 * g + 1, y, x);
              ++n;
            }
        if (n == 0) continue;
        const int frame = clip.observed_len + k;
        const auto gl = oc.law_flow(g, frame);
        const auto sl = oc.law_flow(seg.source, frame);
        seg.predicted[0] += sx / static_cast<double>(n);
        seg.predicted[1] += sy / static_cast<double>(n);
        for (int d = 0; d < 2; ++d) {
          seg.group_law[static_cast<std::size_t>(d)] += gl[static_cast<std::size_t>(d)];
          seg.source_law[static_cast<std::size_t>(d)] += sl[static_cast<std::size_t>(d)];
        }
        ++steps;
      }
      if (steps > 0) {
        for (auto* v : {&seg.predicted, &seg.group_law, &seg.source_law})
          for (double& c : *v) c /= steps;
        seg.evaluable = true;
        seg.follows_group = distance(seg.predicted, seg.group_law) < distance(seg.predicted, seg.source_law);
      }
      result.segments.push_back(seg);
    }
    const bool any = std::any_of(result.segments.begin(), result.segments.end(), [](const SegmentSwap& s) { return s.evaluable; });
    result.success = any && std::all_of(result.segments.begin(), result.segments.end(),
                                        [](const SegmentSwap& s) { return !s.evaluable || s.follows_group; });
    report.clips.push_back(std::move(result));
  }
  return report;
}

void validate_merge_map(const std::vector<int>& merge, int num_classes) {
  if (static_cast<int>(merge.size()) != num_classes) throw ConfigError("merge map needs one entry per class");
  int next = 0;
  for (int m : merge) {
    if (m < 0 || m > next) throw ConfigError("merge map classes must be numbered in order of first use");
    if (m == next) ++next;
  }
}

int merged_class_count(const std::vector<int>& merge) {
  return merge.empty() ? 0 : *std::max_element(merge.begin(), merge.end()) + 1;
}

core::Clip merge_classes(const core::Clip& clip, const std::vector<int>& merge) {
  validate_merge_map(merge, clip.num_classes());
  const int n = merged_class_count(merge);
  core::Clip out = clip;
  for (auto& map : out.maps) {
    std::vector<int> labels = map.labels();
    for (int& l : labels) l = merge[static_cast<std::size_t>(l)];
    map = core::SemanticMap(map.height(), map.width(), n, std::move(labels));
  }
  return out;
}

}  // namespace sadm::harness
