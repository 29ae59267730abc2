#include "sadm/warp/disocclusion.hpp"

#include <algorithm>

#include "sadm/core/error.hpp"

namespace sadm::warp {

std::size_t DisocclusionMask::count() const {
  return static_cast<std::size_t>(std::count_if(flags_.begin(), flags_.end(), [](std::uint8_t f) { return f != kNone; }));
}

std::vector<bool> DisocclusionMask::as_bools() const {
  std::vector<bool> out(flags_.size());
  for (std::size_t i = 0; i < flags_.size(); ++i) out[i] = flags_[i] != kNone;
  return out;
}

Tensor DisocclusionMask::as_tensor() const {
  Tensor out({1, height_, width_});
  for (std::size_t i = 0; i < flags_.size(); ++i) out[i] = flags_[i] != kNone ? 1.0 : 0.0;
  return out;
}

DisocclusionMask DisocclusionMask::unite(const DisocclusionMask& a, const DisocclusionMask& b) {
  if (a.height_ != b.height_ || a.width_ != b.width_) throw ShapeError("cannot unite masks of different size");
  DisocclusionMask out = a;
  for (std::size_t i = 0; i < out.flags_.size(); ++i) out.flags_[i] |= b.flags_[i];
  return out;
}

double DetectionScore::precision() const {
  const auto d = true_positive + false_positive;
  return d == 0 ? 1.0 : static_cast<double>(true_positive) / static_cast<double>(d);
}

double DetectionScore::recall() const {
  const auto d = true_positive + false_negative;
  return d == 0 ? 1.0 : static_cast<double>(true_positive) / static_cast<double>(d);
}

double DetectionScore::f1() const {
  const auto d = 2 * true_positive + false_positive + false_negative;
  return d == 0 ? 1.0 : 2.0 * static_cast<double>(true_positive) / static_cast<double>(d);
}

DetectionScore& DetectionScore::operator+=(const DetectionScore& o) {
  true_positive += o.true_positive;
  false_positive += o.false_positive;
  false_negative += o.false_negative;
  return *this;
}

DetectionScore score_detection(const DisocclusionMask& predicted, const DisocclusionMask& truth) {
  if (predicted.height() != truth.height() || predicted.width() != truth.width()) throw ShapeError("score_detection: size mismatch");
  DetectionScore s;
  for (int y = 0; y < truth.height(); ++y)
    for (int x = 0; x < truth.width(); ++x) {
      const bool p = predicted(y, x), t = truth(y, x);
      if (p && t) ++s.true_positive;
      else if (p) ++s.false_positive;
      else if (t) ++s.false_negative;
    }
  return s;
}

}  // namespace sadm::warp
