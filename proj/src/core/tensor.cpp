#include "sadm/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "sadm/core/error.hpp"

namespace sadm {

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative extent in shape " + to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor value count " + std::to_string(data_.size()) + " does not match shape " +
                     to_string(shape_));
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::slice0(int start, int count) const {
  if (rank() == 0 || start < 0 || count < 0 || start + count > shape_[0]) {
    throw ShapeError("slice0 out of range on " + to_string(shape_));
  }
  const std::size_t stride = shape_[0] ? data_.size() / shape_[0] : 0;
  Shape out_shape = shape_;
  out_shape[0] = count;
  std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(start * stride),
                          data_.begin() + static_cast<std::ptrdiff_t>((start + count) * stride));
  return Tensor(std::move(out_shape), std::move(out));
}

Tensor Tensor::concat0(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat0 of zero tensors");
  Shape out_shape = parts[0].shape();
  out_shape[0] = 0;
  for (const auto& p : parts) {
    if (p.rank() != parts[0].rank() ||
        !std::equal(p.shape().begin() + 1, p.shape().end(), parts[0].shape().begin() + 1)) {
      throw ShapeError("concat0 trailing shapes differ: " + to_string(p.shape()) + " vs " +
                       to_string(parts[0].shape()));
    }
    out_shape[0] += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(shape_size(out_shape));
  for (const auto& p : parts) out.insert(out.end(), p.storage().begin(), p.storage().end());
  return Tensor(std::move(out_shape), std::move(out));
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::abs_max() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

}  // namespace sadm
