#include "sadm/core/ops.hpp"

#include <algorithm>
#include <cmath>

#include "sadm/core/error.hpp"

namespace sadm::core {

ClassDecomposition decompose(const SemanticMap& map, const FlowField& flow) {
  const int h = map.height(), w = map.width();
  if (flow.height() != h || flow.width() != w) {
    throw ShapeError("decompose: map is " + std::to_string(h) + "x" + std::to_string(w) + " but flow is " +
                     std::to_string(flow.height()) + "x" + std::to_string(flow.width()));
  }
  ClassDecomposition out;
  out.masks.assign(static_cast<std::size_t>(map.num_classes()), Tensor({h, w}));
  out.masked_flows.assign(static_cast<std::size_t>(map.num_classes()), Tensor({2, h, w}));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto c = static_cast<std::size_t>(map(y, x));
      out.masks[c].at(y, x) = 1.0;
      out.masked_flows[c].at(0, y, x) = flow.u(y, x);
      out.masked_flows[c].at(1, y, x) = flow.v(y, x);
    }
  }
  return out;
}

Tensor bilinear_sample(const Tensor& image, const Tensor& coords) {
  if (image.rank() != 3) throw ShapeError("bilinear_sample: image must be [D,H,W]");
  if (coords.rank() != 3 || coords.dim(0) != 2) throw ShapeError("bilinear_sample: coords must be [2,H,W]");
  if (!coords.all_finite()) throw NumericError("bilinear_sample: non-finite sampling coordinates");
  const int d = image.dim(0), h = image.dim(1), w = image.dim(2);
  const int ho = coords.dim(1), wo = coords.dim(2);
  Tensor out({d, ho, wo});
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      const double sx = std::clamp(coords.at(0, y, x), 0.0, static_cast<double>(w - 1));
      const double sy = std::clamp(coords.at(1, y, x), 0.0, static_cast<double>(h - 1));
      const int x0 = std::min(static_cast<int>(sx), w - 1);
      const int y0 = std::min(static_cast<int>(sy), h - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double ax = sx - x0, ay = sy - y0;
      for (int c = 0; c < d; ++c) {
        const double top = image.at(c, y0, x0) * (1.0 - ax) + image.at(c, y0, x1) * ax;
        const double bot = image.at(c, y1, x0) * (1.0 - ax) + image.at(c, y1, x1) * ax;
        out.at(c, y, x) = top * (1.0 - ay) + bot * ay;
      }
    }
  }
  return out;
}

Tensor flow_to_coords(const FlowField& flow) {
  Tensor coords = flow.vectors;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      coords.at(0, y, x) += x;
      coords.at(1, y, x) += y;
    }
  }
  return coords;
}

SemanticMap nearest_sample_labels(const SemanticMap& source, const FlowField& flow) {
  const int h = source.height(), w = source.width();
  if (flow.height() != h || flow.width() != w) throw ShapeError("nearest_sample_labels: shape mismatch");
  if (!flow.vectors.all_finite()) throw NumericError("nearest_sample_labels: non-finite flow");
  SemanticMap out(h, w, source.num_classes());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = std::clamp(static_cast<int>(std::lround(x + flow.u(y, x))), 0, w - 1);
      const int sy = std::clamp(static_cast<int>(std::lround(y + flow.v(y, x))), 0, h - 1);
      out.set(y, x, source(sy, sx));
    }
  }
  return out;
}

Tensor label_edges(const SemanticMap& map) {
  const int h = map.height(), w = map.width();
  Tensor edges({h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool right = x + 1 < w && map(y, x + 1) != map(y, x);
      const bool down = y + 1 < h && map(y + 1, x) != map(y, x);
      edges.at(y, x) = (right || down) ? 1.0 : 0.0;
    }
  }
  return edges;
}

std::vector<double> gaussian_kernel_1d(double variance) {
  if (!(variance > 0.0)) throw ConfigError("gaussian variance must be positive");
  const double sigma = std::sqrt(variance);
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / variance);
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

BoundaryWeightMap boundary_weights(const SemanticMap& map, double alpha, double variance) {
  if (alpha < 0.0) throw ConfigError("boundary alpha must be non-negative");
  const auto kernel = gaussian_kernel_1d(variance);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int h = map.height(), w = map.width();
  const Tensor edges = label_edges(map);

  Tensor rows({h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = x + k;
        if (xx >= 0 && xx < w) acc += kernel[static_cast<std::size_t>(k + radius)] * edges.at(y, xx);
      }
      rows.at(y, x) = acc;
    }
  }
  BoundaryWeightMap out{Tensor({h, w}), alpha, variance};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = y + k;
        if (yy >= 0 && yy < h) acc += kernel[static_cast<std::size_t>(k + radius)] * rows.at(yy, x);
      }
      out.weights.at(y, x) = 1.0 + alpha * acc;
    }
  }
  return out;
}

}  // namespace sadm::core
