#pragma once

#include <cstdint>
#include <vector>

#include "sadm/core/types.hpp"

namespace sadm::warp {

/// Bit flags recording which criterion marked a pixel.
enum Provenance : std::uint8_t {
  kNone = 0,
  kOccupancy = 1,
  kSemantic = 2,
  kBoth = kOccupancy | kSemantic,
  kAnalytic = 4,  // ground truth from the synthetic world
};

/// Per-pixel dis-occlusion flags. A pixel is dis-occluded when any provenance bit is set.
class DisocclusionMask {
 public:
  DisocclusionMask() = default;
  DisocclusionMask(int height, int width) : height_(height), width_(width), flags_(static_cast<std::size_t>(height) * width, kNone) {}

  int height() const { return height_; }
  int width() const { return width_; }
  bool operator()(int y, int x) const { return flags_[index(y, x)] != kNone; }
  std::uint8_t provenance(int y, int x) const { return flags_[index(y, x)]; }
  void mark(int y, int x, std::uint8_t flag) { flags_[index(y, x)] |= flag; }

  std::size_t count() const;
  std::vector<bool> as_bools() const;
  /// [1, H, W] tensor, 1 where dis-occluded.
  Tensor as_tensor() const;
  const std::vector<std::uint8_t>& flags() const { return flags_; }

  /// Union of the two masks, merging provenance.
  static DisocclusionMask unite(const DisocclusionMask& a, const DisocclusionMask& b);

 private:
  std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width_ + x; }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> flags_;
};

/// Precision, recall and F1 of `predicted` against `truth`. Empty-vs-empty scores 1.
struct DetectionScore {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  double precision() const;
  double recall() const;
  double f1() const;
  DetectionScore& operator+=(const DetectionScore& o);
};
DetectionScore score_detection(const DisocclusionMask& predicted, const DisocclusionMask& truth);

}  // namespace sadm::warp
