#pragma once

#include <vector>

#include "sadm/core/types.hpp"

namespace sadm::harness {

inline constexpr double kPsnrCap = 100.0;

/// Peak 1.0; identical images give kPsnrCap.
double psnr(const Tensor& a, const Tensor& b);
/// Gaussian-window SSIM (11 taps, sigma 1.5, replicated borders), averaged over channels and pixels.
double ssim(const Tensor& a, const Tensor& b);
/// Five-scale MS-SSIM with the standard weights; contrast-structure terms clamped at zero.
/// Images are halved by 2x2 averaging between scales.
double ms_ssim(const Tensor& a, const Tensor& b);

/// Dataset-level confusion matrix.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes = 1);
  void add(const core::SemanticMap& pred, const core::SemanticMap& truth);
  /// IoU per class; classes absent from both prediction and truth get -1.
  std::vector<double> iou() const;
  /// Mean over classes present in prediction or truth.
  double miou() const;
  long long count(int truth, int pred) const { return counts_[static_cast<std::size_t>(truth * n_ + pred)]; }

 private:
  int n_;
  std::vector<long long> counts_;
};

/// Pixels within Chebyshev distance `radius` of a label edge (a pixel with a 4-neighbour of another class).
std::vector<bool> boundary_band(const core::SemanticMap& map, int radius);

/// Sum and count of endpoint errors, optionally restricted to `mask`.
struct EpeAccumulator {
  double sum = 0.0;
  long long count = 0;
  void add(const core::FlowField& pred, const core::FlowField& truth, const std::vector<bool>* mask = nullptr);
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

}  // namespace sadm::harness
