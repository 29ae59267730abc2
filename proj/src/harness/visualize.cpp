#include "sadm/harness/visualize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "sadm/core/error.hpp"

namespace sadm::harness {

namespace {

std::array<double, 3> hsv(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h, 1.0) * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  std::array<double, 3> rgb{};
  switch (static_cast<int>(hp) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  for (double& k : rgb) k += v - c;
  return rgb;
}

constexpr std::array<std::array<double, 3>, 8> kPalette{{{0.20, 0.20, 0.20},
                                                          {0.90, 0.30, 0.20},
                                                          {0.20, 0.60, 0.90},
                                                          {0.95, 0.80, 0.20},
                                                          {0.30, 0.80, 0.40},
                                                          {0.70, 0.40, 0.85},
                                                          {0.95, 0.55, 0.75},
                                                          {0.55, 0.85, 0.85}}};

}  // namespace

Tensor flow_to_rgb(const core::FlowField& flow, double max_magnitude) {
  const int h = flow.height(), w = flow.width();
  double top = max_magnitude;
  if (top <= 0.0)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) top = std::max(top, std::hypot(flow.u(y, x), flow.v(y, x)));
  Tensor out({3, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = flow.u(y, x), v = flow.v(y, x);
      const double mag = top > 0.0 ? std::min(1.0, std::hypot(u, v) / top) : 0.0;
      const double angle = std::atan2(-v, -u) / (2.0 * std::numbers::pi) + 0.5;
      const auto rgb = hsv(angle, mag, 1.0);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = rgb[static_cast<std::size_t>(c)];
    }
  return out;
}

Tensor map_to_rgb(const core::SemanticMap& map) {
  Tensor out({3, map.height(), map.width()});
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      const auto& col = kPalette[static_cast<std::size_t>(map(y, x)) % kPalette.size()];
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = col[static_cast<std::size_t>(c)];
    }
  return out;
}

Tensor overlay_mask(const Tensor& rgb, const warp::DisocclusionMask& mask, std::array<double, 3> color, double opacity) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3 || rgb.dim(1) != mask.height() || rgb.dim(2) != mask.width())
    throw ShapeError("overlay_mask: image and mask differ in size");
  Tensor out = rgb;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(y, x))
        for (int c = 0; c < 3; ++c)
          out.at(c, y, x) = (1.0 - opacity) * out.at(c, y, x) + opacity * color[static_cast<std::size_t>(c)];
  return out;
}

Tensor make_grid(const std::vector<std::vector<Tensor>>& rows, int gap) {
  if (rows.empty() || rows.front().empty()) throw ShapeError("make_grid: nothing to tile");
  const int h = rows.front().front().dim(1), w = rows.front().front().dim(2);
  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  const int gh = static_cast<int>(rows.size()) * (h + gap) + gap;
  const int gw = static_cast<int>(cols) * (w + gap) + gap;
  Tensor out({3, gh, gw});
  out.fill(1.0);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t k = 0; k < rows[r].size(); ++k) {
      const Tensor& img = rows[r][k];
      if (img.shape() != Shape{3, h, w}) throw ShapeError("make_grid: images differ in size");
      const int oy = gap + static_cast<int>(r) * (h + gap), ox = gap + static_cast<int>(k) * (w + gap);
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) out.at(c, oy + y, ox + x) = img.at(c, y, x);
    }
  return out;
}

}  // namespace sadm::harness
