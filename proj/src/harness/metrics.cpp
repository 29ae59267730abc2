#include "sadm/harness/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sadm/core/error.hpp"
#include "sadm/core/ops.hpp"

namespace sadm::harness {
namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

/// Separable Gaussian filter of one [H, W] plane with replicated borders.
std::vector<double> blur(const std::vector<double>& img, int h, int w, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(img.size()), out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * img[static_cast<std::size_t>(y * w + std::clamp(x + i, 0, w - 1))];
      tmp[static_cast<std::size_t>(y * w + x)] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1) * w + x)];
      out[static_cast<std::size_t>(y * w + x)] = s;
    }
  return out;
}

const std::vector<double>& window() {
  static const std::vector<double> k = [] {
    std::vector<double> v(11);
    double s = 0.0;
    for (int i = 0; i < 11; ++i) s += v[static_cast<std::size_t>(i)] = std::exp(-(i - 5) * (i - 5) / (2 * 1.5 * 1.5));
    for (double& x : v) x /= s;
    return v;
  }();
  return k;
}

struct SsimParts {
  double luminance = 0.0;  // mean l
  double cs = 0.0;         // mean contrast-structure
  double ssim = 0.0;       // mean l * cs
};

SsimParts ssim_parts(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "ssim");
  if (a.rank() != 3) throw ShapeError("ssim expects [C, H, W]");
  const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  const auto plane = static_cast<std::size_t>(h) * w;
  SsimParts out;
  for (int ch = 0; ch < c; ++ch) {
    std::vector<double> x(a.data() + ch * plane, a.data() + (ch + 1) * plane);
    std::vector<double> y(b.data() + ch * plane, b.data() + (ch + 1) * plane);
    std::vector<double> xx(plane), yy(plane), xy(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = blur(x, h, w, window()), my = blur(y, h, w, window());
    const auto sxx = blur(xx, h, w, window()), syy = blur(yy, h, w, window()), sxy = blur(xy, h, w, window());
    for (std::size_t i = 0; i < plane; ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
      const double l = (2 * mx[i] * my[i] + kC1) / (mx[i] * mx[i] + my[i] * my[i] + kC1);
      const double cs = (2 * cov + kC2) / (vx + vy + kC2);
      out.luminance += l;
      out.cs += cs;
      out.ssim += l * cs;
    }
  }
  const double n = static_cast<double>(c) * static_cast<double>(plane);
  out.luminance /= n;
  out.cs /= n;
  out.ssim /= n;
  return out;
}

Tensor halve(const Tensor& t) {
  const int c = t.dim(0), h = t.dim(1) / 2, w = t.dim(2) / 2;
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.at(ch, y, x) = 0.25 * (t.at(ch, 2 * y, 2 * x) + t.at(ch, 2 * y, 2 * x + 1) + t.at(ch, 2 * y + 1, 2 * x) + t.at(ch, 2 * y + 1, 2 * x + 1));
  return out;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= static_cast<double>(a.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const Tensor& a, const Tensor& b) { return ssim_parts(a, b).ssim; }

double ms_ssim(const Tensor& a, const Tensor& b) {
  static constexpr std::array<double, 5> kWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  Tensor x = a, y = b;
  double out = 1.0;
  for (std::size_t s = 0; s < kWeights.size(); ++s) {
    const auto parts = ssim_parts(x, y);
    if (s + 1 == kWeights.size()) {
      out *= std::pow(std::max(parts.ssim, 0.0), kWeights[s]);
    } else {
      out *= std::pow(std::max(parts.cs, 0.0), kWeights[s]);
      if (x.dim(1) < 2 || x.dim(2) < 2) throw ShapeError("ms_ssim: image too small for five scales");
      x = halve(x);
      y = halve(y);
    }
  }
  return out;
}

ConfusionMatrix::ConfusionMatrix(int num_classes) : n_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {}

void ConfusionMatrix::add(const core::SemanticMap& pred, const core::SemanticMap& truth) {
  if (pred.height() != truth.height() || pred.width() != truth.width()) throw ShapeError("confusion: size mismatch");
  if (pred.num_classes() != n_ || truth.num_classes() != n_) throw ShapeError("confusion: class-count mismatch");
  for (std::size_t i = 0; i < truth.labels().size(); ++i) ++counts_[static_cast<std::size_t>(truth.labels()[i] * n_ + pred.labels()[i])];
}

std::vector<double> ConfusionMatrix::iou() const {
  std::vector<double> out(static_cast<std::size_t>(n_), -1.0);
  for (int c = 0; c < n_; ++c) {
    long long tp = count(c, c), fp = 0, fn = 0;
    for (int k = 0; k < n_; ++k) {
      if (k == c) continue;
      fp += count(k, c);
      fn += count(c, k);
    }
    const long long d = tp + fp + fn;
    if (d > 0) out[static_cast<std::size_t>(c)] = static_cast<double>(tp) / static_cast<double>(d);
  }
  return out;
}

double ConfusionMatrix::miou() const {
  double s = 0.0;
  int n = 0;
  for (double v : iou())
    if (v >= 0.0) {
      s += v;
      ++n;
    }
  return n == 0 ? 1.0 : s / n;
}

std::vector<bool> boundary_band(const core::SemanticMap& map, int radius) {
  const int h = map.height(), w = map.width();
  std::vector<bool> edge(static_cast<std::size_t>(h) * w, false);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int l = map(y, x);
      edge[static_cast<std::size_t>(y * w + x)] = (x > 0 && map(y, x - 1) != l) || (x + 1 < w && map(y, x + 1) != l) ||
                                                  (y > 0 && map(y - 1, x) != l) || (y + 1 < h && map(y + 1, x) != l);
    }
  std::vector<bool> band(edge.size(), false);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!edge[static_cast<std::size_t>(y * w + x)]) continue;
      for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius); ++yy)
        for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx) band[static_cast<std::size_t>(yy * w + xx)] = true;
    }
  return band;
}

void EpeAccumulator::add(const core::FlowField& pred, const core::FlowField& truth, const std::vector<bool>* mask) {
  require_same_shape(pred.vectors, truth.vectors, "epe");
  const int h = truth.height(), w = truth.width();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (mask && !(*mask)[static_cast<std::size_t>(y * w + x)]) continue;
      sum += std::hypot(pred.u(y, x) - truth.u(y, x), pred.v(y, x) - truth.v(y, x));
      ++count;
    }
}

}  // namespace sadm::harness
