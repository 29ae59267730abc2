#pragma once

#include <cstdint>
#include <vector>

#include "sadm/core/tensor.hpp"

namespace sadm::core {

/// RGB frame, planar [3, H, W] with values in [0, 1].
struct Frame {
  Tensor pixels;
  int timestamp = 0;

  Frame() = default;
  Frame(int height, int width, int t = 0) : pixels({3, height, width}), timestamp(t) {}
  explicit Frame(Tensor px, int t = 0);

  int height() const { return pixels.dim(1); }
  int width() const { return pixels.dim(2); }
  /// Throws NumericError when a channel value leaves [0, 1] or is non-finite.
  void validate() const;
};

/// Backward displacement field [2, H, W]: channel 0 is x (columns), channel 1 is y (rows).
/// The vector at target pixel p points to its source location p + f(p) in the previous frame.
struct FlowField {
  Tensor vectors;

  FlowField() = default;
  FlowField(int height, int width) : vectors({2, height, width}) {}
  explicit FlowField(Tensor v);

  int height() const { return vectors.dim(1); }
  int width() const { return vectors.dim(2); }
  double u(int y, int x) const { return vectors.at(0, y, x); }
  double v(int y, int x) const { return vectors.at(1, y, x); }
  void validate() const;
};

/// Hard per-pixel class labels.
///
/// Labels are 0-based in memory (0 .. C-1). Files and user-facing reports use 1-based
/// class ids (1 .. C); the conversion happens in io.hpp and the CLI only.
class SemanticMap {
 public:
  SemanticMap() = default;
  SemanticMap(int height, int width, int num_classes, int fill = 0);
  SemanticMap(int height, int width, int num_classes, std::vector<int> labels);

  int height() const { return height_; }
  int width() const { return width_; }
  int num_classes() const { return num_classes_; }
  int operator()(int y, int x) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int y, int x, int label);
  const std::vector<int>& labels() const { return labels_; }

  /// Count of pixels per class.
  std::vector<int> histogram() const;
  bool operator==(const SemanticMap&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int num_classes_ = 1;
  std::vector<int> labels_;
};

/// Per-pixel class probabilities [C, H, W].
struct SoftSemanticMap {
  Tensor probs;

  SoftSemanticMap() = default;
  explicit SoftSemanticMap(Tensor p) : probs(std::move(p)) {}

  int num_classes() const { return probs.dim(0); }
  int height() const { return probs.dim(1); }
  int width() const { return probs.dim(2); }
  /// Hardened labels; ties resolve to the lowest class index.
  SemanticMap argmax() const;
  /// Throws NumericError if any pixel is off the simplex by more than `tol`.
  void validate(double tol = 1e-6) const;

  static SoftSemanticMap one_hot(const SemanticMap& map);
};

/// Per-class binary masks and masked flows, each [H, W] and [2, H, W].
struct ClassDecomposition {
  std::vector<Tensor> masks;
  std::vector<Tensor> masked_flows;

  int num_classes() const { return static_cast<int>(masks.size()); }
};

struct BoundaryWeightMap {
  Tensor weights;  // [H, W]
  double alpha = 0.0;
  double variance = 0.0;
};

/// Aligned frames, flows and maps of length observed_len + horizon.
struct Clip {
  std::vector<Frame> frames;
  std::vector<FlowField> flows;
  std::vector<SemanticMap> maps;
  int observed_len = 0;
  int horizon = 0;

  int length() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int num_classes() const { return maps.empty() ? 0 : maps.front().num_classes(); }
  /// Checks T >= 1, K >= 1, lengths and shared H, W, C.
  void validate() const;
};

}  // namespace sadm::core
