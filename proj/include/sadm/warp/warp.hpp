#pragma once

#include "sadm/core/types.hpp"
#include "sadm/warp/disocclusion.hpp"

namespace sadm::warp {

/// Backward-warped frame. Pixels are defined everywhere; only the complement of the
/// dis-occlusion mask is meaningful.
struct WarpedFrame {
  core::Frame frame;
  DisocclusionMask disoccluded;
};

/// x_hat(p) = src(p + flow(p)), bilinear with border clamp.
core::Frame warp_frame(const core::Frame& src, const core::FlowField& flow);

struct OccupancyOptions {
  /// Accumulated splat mass above which a source pixel counts as over-occupied.
  double threshold = 1.5;
  /// Slack when testing whether p + flow(p) lies inside the source image.
  double bounds_tolerance = 1e-6;
};

struct OccupancyResult {
  Tensor occupancy;  // [H, W] accumulated bilinear mass per source pixel
  DisocclusionMask mask;
};

/// Pixel-occupancy criterion.
///
/// Every target pixel splats unit mass to its source location with bilinear weights. A target
/// pixel is flagged when its dominant source pixel (largest weight) is over-occupied and it is
/// not the dominant contributor there, or when its source lies outside the image.
/// Dominance ties prefer the contributor whose label in `target_labels` matches
/// `source_labels` at the contested pixel, then the lower raster index. Without labels only
/// the raster-index tie-break applies.
OccupancyResult detect_occupancy(const core::FlowField& flow, const core::SemanticMap* target_labels = nullptr,
                                 const core::SemanticMap* source_labels = nullptr, OccupancyOptions opts = {});

enum class SemanticCriterion {
  /// Predicted label at p against the previous label at the flow-warped source p + flow(p).
  kWarpedSource,
  /// Predicted label at p against the previous label at p itself.
  kColocated,
};

/// Semantic-consistency criterion: flags p when pred_map(p) differs from the source label.
DisocclusionMask detect_semantic(const core::SemanticMap& pred_map, const core::SemanticMap& prev_map,
                                 const core::FlowField& flow,
                                 SemanticCriterion criterion = SemanticCriterion::kWarpedSource);

struct DisocclusionOptions {
  OccupancyOptions occupancy;
  SemanticCriterion semantic = SemanticCriterion::kWarpedSource;
  bool use_occupancy = true;
  bool use_semantic = true;
};

/// Union of the occupancy and semantic criteria with provenance flags.
DisocclusionMask detect_disocclusion(const core::SemanticMap& pred_map, const core::SemanticMap& prev_map,
                                     const core::FlowField& flow, DisocclusionOptions opts = {});

/// Convenience: warp and detect in one call.
WarpedFrame propagate(const core::Frame& src, const core::SemanticMap& prev_map, const core::SemanticMap& pred_map,
                      const core::FlowField& flow, DisocclusionOptions opts = {});

}  // namespace sadm::warp
