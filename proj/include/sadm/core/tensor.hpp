#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sadm {

using Shape = std::vector<int>;

std::string to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array of doubles with a runtime shape.
///
/// Image-like data is stored channel-first: a rank-3 tensor is [channels, height, width],
/// a rank-4 tensor is [channels, depth, height, width].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape()); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // rank-2 / rank-3 accessors (no bounds checks)
  double& at(int y, int x) { return data_[static_cast<std::size_t>(y) * shape_[1] + x]; }
  double at(int y, int x) const { return data_[static_cast<std::size_t>(y) * shape_[1] + x]; }
  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  /// Same values, new shape with equal element count.
  Tensor reshaped(Shape shape) const;
  void fill(double v);

  /// Copies `count` leading-axis slices starting at `start`.
  Tensor slice0(int start, int count) const;
  static Tensor concat0(std::span<const Tensor> parts);

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  double sum() const;
  double abs_max() const;
  bool all_finite() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);

/// Throws ShapeError with `what` context if shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace sadm
