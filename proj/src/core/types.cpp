#include "sadm/core/types.hpp"

#include <cmath>
#include <string>

#include "sadm/core/error.hpp"

namespace sadm::core {

Frame::Frame(Tensor px, int t) : pixels(std::move(px)), timestamp(t) {
  if (pixels.rank() != 3 || pixels.dim(0) != 3) throw ShapeError("frame must be [3,H,W], got " + to_string(pixels.shape()));
}

void Frame::validate() const {
  for (double v : pixels.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw NumericError("frame value outside [0,1]: " + std::to_string(v));
  }
}

FlowField::FlowField(Tensor v) : vectors(std::move(v)) {
  if (vectors.rank() != 3 || vectors.dim(0) != 2) throw ShapeError("flow must be [2,H,W], got " + to_string(vectors.shape()));
}

void FlowField::validate() const {
  if (!vectors.all_finite()) throw NumericError("flow field contains non-finite values");
}

SemanticMap::SemanticMap(int height, int width, int num_classes, int fill)
    : height_(height), width_(width), num_classes_(num_classes),
      labels_(static_cast<std::size_t>(height) * width, fill) {
  if (num_classes < 1) throw ShapeError("semantic map needs at least one class");
  if (fill < 0 || fill >= num_classes) throw ShapeError("fill label out of range");
}

SemanticMap::SemanticMap(int height, int width, int num_classes, std::vector<int> labels)
    : height_(height), width_(width), num_classes_(num_classes), labels_(std::move(labels)) {
  if (num_classes < 1) throw ShapeError("semantic map needs at least one class");
  if (labels_.size() != static_cast<std::size_t>(height) * width) throw ShapeError("label count does not match H*W");
  for (int l : labels_) {
    if (l < 0 || l >= num_classes) throw ShapeError("label " + std::to_string(l) + " outside 0.." + std::to_string(num_classes - 1));
  }
}

void SemanticMap::set(int y, int x, int label) {
  if (label < 0 || label >= num_classes_) throw ShapeError("label out of range");
  labels_[static_cast<std::size_t>(y) * width_ + x] = label;
}

std::vector<int> SemanticMap::histogram() const {
  std::vector<int> h(static_cast<std::size_t>(num_classes_), 0);
  for (int l : labels_) ++h[static_cast<std::size_t>(l)];
  return h;
}

SemanticMap SoftSemanticMap::argmax() const {
  const int c_count = num_classes(), h = height(), w = width();
  SemanticMap out(h, w, c_count);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int best = 0;
      for (int c = 1; c < c_count; ++c) {
        if (probs.at(c, y, x) > probs.at(best, y, x)) best = c;
      }
      out.set(y, x, best);
    }
  }
  return out;
}

void SoftSemanticMap::validate(double tol) const {
  if (probs.rank() != 3) throw ShapeError("soft map must be [C,H,W]");
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      double s = 0.0;
      for (int c = 0; c < num_classes(); ++c) {
        const double p = probs.at(c, y, x);
        if (!(p >= 0.0)) throw NumericError("negative or NaN class probability");
        s += p;
      }
      if (std::abs(s - 1.0) > tol) throw NumericError("class probabilities do not sum to one");
    }
  }
}

SoftSemanticMap SoftSemanticMap::one_hot(const SemanticMap& map) {
  Tensor p({map.num_classes(), map.height(), map.width()});
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) p.at(map(y, x), y, x) = 1.0;
  return SoftSemanticMap(std::move(p));
}

void Clip::validate() const {
  if (observed_len < 1 || horizon < 1) throw ShapeError("clip needs observed_len >= 1 and horizon >= 1");
  const auto n = static_cast<std::size_t>(observed_len + horizon);
  if (frames.size() != n || flows.size() != n || maps.size() != n) {
    throw ShapeError("clip sequences must all have length T+K = " + std::to_string(n));
  }
  const int h = height(), w = width(), c = num_classes();
  for (std::size_t i = 0; i < n; ++i) {
    if (frames[i].height() != h || frames[i].width() != w || flows[i].height() != h || flows[i].width() != w ||
        maps[i].height() != h || maps[i].width() != w || maps[i].num_classes() != c) {
      throw ShapeError("clip element " + std::to_string(i) + " has inconsistent H, W or C");
    }
  }
}

}  // namespace sadm::core
