#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "sadm/core/types.hpp"
#include "sadm/warp/disocclusion.hpp"

namespace sadm::harness {

/// Hue from direction, saturation from magnitude relative to `max_magnitude` (the field's
/// largest vector when <= 0). Zero flow is white.
Tensor flow_to_rgb(const core::FlowField& flow, double max_magnitude = 0.0);
/// Fixed palette indexed by class.
Tensor map_to_rgb(const core::SemanticMap& map);
/// Blends `color` into the frame wherever the mask is set.
Tensor overlay_mask(const Tensor& rgb, const warp::DisocclusionMask& mask, std::array<double, 3> color = {1.0, 0.0, 1.0},
                    double opacity = 0.6);
/// Tiles equally sized [3, H, W] images row by row with a `gap`-pixel white border.
Tensor make_grid(const std::vector<std::vector<Tensor>>& rows, int gap = 2);

}  // namespace sadm::harness
