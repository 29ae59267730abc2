#pragma once

#include <vector>

#include "sadm/core/types.hpp"

namespace sadm::core {

/// Splits a flow field by class: masks[c] = 1(map == c), masked_flows[c] = flow * masks[c].
ClassDecomposition decompose(const SemanticMap& map, const FlowField& flow);

/// Samples `image` [D, H, W] at absolute pixel positions `coords` [2, Ho, Wo] (x then y).
/// Bilinear; positions outside the image clamp to the border.
Tensor bilinear_sample(const Tensor& image, const Tensor& coords);

/// Identity sampling grid [2, H, W] plus `flow`, i.e. the absolute source location of each pixel.
Tensor flow_to_coords(const FlowField& flow);

/// Label of the nearest source pixel (clamped) at p + flow(p) for every target pixel p.
SemanticMap nearest_sample_labels(const SemanticMap& source, const FlowField& flow);

/// Binarized label gradient: 1 where a pixel's label differs from its right or lower neighbour.
Tensor label_edges(const SemanticMap& map);

/// Normalized 1-D Gaussian of the given variance, truncated at three standard deviations.
std::vector<double> gaussian_kernel_1d(double variance);

/// 1 + alpha * (G * edges), with G the separable truncated Gaussian and zero padding.
BoundaryWeightMap boundary_weights(const SemanticMap& map, double alpha, double variance);

}  // namespace sadm::core
