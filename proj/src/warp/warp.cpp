#include "sadm/warp/warp.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "sadm/core/error.hpp"
#include "sadm/core/ops.hpp"

namespace sadm::warp {
namespace {

void require_same_grid(const core::FlowField& flow, const core::SemanticMap& map, const char* what) {
  if (flow.height() != map.height() || flow.width() != map.width()) throw ShapeError(std::string(what) + ": flow and map sizes differ");
}

struct Contributor {
  double weight = -1.0;
  bool agrees = false;
  int target = -1;
};

}  // namespace

core::Frame warp_frame(const core::Frame& src, const core::FlowField& flow) {
  if (src.height() != flow.height() || src.width() != flow.width()) throw ShapeError("warp_frame: frame and flow sizes differ");
  if (!flow.vectors.all_finite()) throw NumericError("warp_frame: non-finite flow");
  return core::Frame(core::bilinear_sample(src.pixels, core::flow_to_coords(flow)), src.timestamp + 1);
}

OccupancyResult detect_occupancy(const core::FlowField& flow, const core::SemanticMap* target_labels,
                                 const core::SemanticMap* source_labels, OccupancyOptions opts) {
  if (!flow.vectors.all_finite()) throw NumericError("detect_occupancy: non-finite flow");
  const int h = flow.height(), w = flow.width();
  if (target_labels) require_same_grid(flow, *target_labels, "detect_occupancy");
  if (source_labels) require_same_grid(flow, *source_labels, "detect_occupancy");
  const bool use_labels = target_labels && source_labels;

  OccupancyResult out{Tensor({h, w}), DisocclusionMask(h, w)};
  std::vector<Contributor> dominant(static_cast<std::size_t>(h) * w);
  std::vector<int> own_source(static_cast<std::size_t>(h) * w, -1);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int target = y * w + x;
      const double sx = x + flow.u(y, x), sy = y + flow.v(y, x);
      if (sx < -opts.bounds_tolerance || sx > w - 1 + opts.bounds_tolerance || sy < -opts.bounds_tolerance ||
          sy > h - 1 + opts.bounds_tolerance) {
        out.mask.mark(y, x, kOccupancy);
        continue;
      }
      const double cx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
      const double cy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
      const int x0 = std::min(static_cast<int>(cx), w - 1), y0 = std::min(static_cast<int>(cy), h - 1);
      const double ax = x0 + 1 < w ? cx - x0 : 0.0, ay = y0 + 1 < h ? cy - y0 : 0.0;
      const std::array<std::pair<int, double>, 4> taps{{
          {y0 * w + x0, (1 - ax) * (1 - ay)},
          {y0 * w + std::min(x0 + 1, w - 1), ax * (1 - ay)},
          {std::min(y0 + 1, h - 1) * w + x0, (1 - ax) * ay},
          {std::min(y0 + 1, h - 1) * w + std::min(x0 + 1, w - 1), ax * ay},
      }};
      double best = -1.0;
      for (const auto& [q, wt] : taps) {
        if (wt <= 0.0) continue;
        if (wt > best) {
          best = wt;
          own_source[static_cast<std::size_t>(target)] = q;
        }
        out.occupancy[static_cast<std::size_t>(q)] += wt;
        const bool agrees = use_labels && (*target_labels)(y, x) == (*source_labels)(q / w, q % w);
        Contributor& d = dominant[static_cast<std::size_t>(q)];
        constexpr double kTie = 1e-9;
        // targets arrive in raster order, so a full tie keeps the earlier one
        if (wt > d.weight + kTie || (std::abs(wt - d.weight) <= kTie && agrees && !d.agrees)) d = {wt, agrees, target};
      }
    }
  }
  for (int target = 0; target < h * w; ++target) {
    const int q = own_source[static_cast<std::size_t>(target)];
    if (q < 0) continue;
    if (out.occupancy[static_cast<std::size_t>(q)] > opts.threshold && dominant[static_cast<std::size_t>(q)].target != target) {
      out.mask.mark(target / w, target % w, kOccupancy);
    }
  }
  return out;
}

DisocclusionMask detect_semantic(const core::SemanticMap& pred_map, const core::SemanticMap& prev_map,
                                 const core::FlowField& flow, SemanticCriterion criterion) {
  if (pred_map.num_classes() != prev_map.num_classes()) throw ShapeError("detect_semantic: class-count mismatch");
  if (pred_map.height() != prev_map.height() || pred_map.width() != prev_map.width()) throw ShapeError("detect_semantic: map sizes differ");
  require_same_grid(flow, pred_map, "detect_semantic");
  const core::SemanticMap source =
      criterion == SemanticCriterion::kWarpedSource ? core::nearest_sample_labels(prev_map, flow) : prev_map;
  DisocclusionMask mask(pred_map.height(), pred_map.width());
  for (int y = 0; y < pred_map.height(); ++y)
    for (int x = 0; x < pred_map.width(); ++x)
      if (pred_map(y, x) != source(y, x)) mask.mark(y, x, kSemantic);
  return mask;
}

DisocclusionMask detect_disocclusion(const core::SemanticMap& pred_map, const core::SemanticMap& prev_map,
                                     const core::FlowField& flow, DisocclusionOptions opts) {
  DisocclusionMask out(pred_map.height(), pred_map.width());
  if (opts.use_semantic) out = DisocclusionMask::unite(out, detect_semantic(pred_map, prev_map, flow, opts.semantic));
  if (opts.use_occupancy) out = DisocclusionMask::unite(out, detect_occupancy(flow, &pred_map, &prev_map, opts.occupancy).mask);
  return out;
}

WarpedFrame propagate(const core::Frame& src, const core::SemanticMap& prev_map, const core::SemanticMap& pred_map,
                      const core::FlowField& flow, DisocclusionOptions opts) {
  return WarpedFrame{warp_frame(src, flow), detect_disocclusion(pred_map, prev_map, flow, opts)};
}

}  // namespace sadm::warp
