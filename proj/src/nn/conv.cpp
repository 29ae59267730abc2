// Grouped 2-D / 3-D convolution through im2col + GEMM.
#include <Eigen/Core>

#include "sadm/core/error.hpp"
#include "sadm/nn/ops.hpp"

namespace sadm::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

struct Geometry {
  int cin, d, h, w;        // input
  int cout, kd, kh, kw;    // kernel
  int sd, s, pd, p;        // strides / pads
  int groups;
  int od, oh, ow;          // output
  int cin_g() const { return cin / groups; }
  int cout_g() const { return cout / groups; }
  int rows() const { return cin_g() * kd * kh * kw; }
  int cols() const { return od * oh * ow; }
  std::size_t in_plane() const { return static_cast<std::size_t>(d) * h * w; }
};

void im2col(const double* x, const Geometry& g, double* col) {
  const int cols = g.cols();
  for (int c = 0; c < g.cin_g(); ++c)
    for (int kz = 0; kz < g.kd; ++kz)
      for (int ky = 0; ky < g.kh; ++ky)
        for (int kx = 0; kx < g.kw; ++kx) {
          const int row = ((c * g.kd + kz) * g.kh + ky) * g.kw + kx;
          double* dst = col + static_cast<std::size_t>(row) * cols;
          const double* plane = x + static_cast<std::size_t>(c) * g.in_plane();
          for (int oz = 0; oz < g.od; ++oz) {
            const int iz = oz * g.sd - g.pd + kz;
            for (int oy = 0; oy < g.oh; ++oy) {
              const int iy = oy * g.s - g.p + ky;
              double* out = dst + (static_cast<std::size_t>(oz) * g.oh + oy) * g.ow;
              if (iz < 0 || iz >= g.d || iy < 0 || iy >= g.h) {
                for (int ox = 0; ox < g.ow; ++ox) out[ox] = 0.0;
                continue;
              }
              const double* src = plane + (static_cast<std::size_t>(iz) * g.h + iy) * g.w;
              for (int ox = 0; ox < g.ow; ++ox) {
                const int ix = ox * g.s - g.p + kx;
                out[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
              }
            }
          }
        }
}

void col2im(const double* col, const Geometry& g, double* x) {
  const int cols = g.cols();
  for (int c = 0; c < g.cin_g(); ++c)
    for (int kz = 0; kz < g.kd; ++kz)
      for (int ky = 0; ky < g.kh; ++ky)
        for (int kx = 0; kx < g.kw; ++kx) {
          const int row = ((c * g.kd + kz) * g.kh + ky) * g.kw + kx;
          const double* src = col + static_cast<std::size_t>(row) * cols;
          double* plane = x + static_cast<std::size_t>(c) * g.in_plane();
          for (int oz = 0; oz < g.od; ++oz) {
            const int iz = oz * g.sd - g.pd + kz;
            if (iz < 0 || iz >= g.d) continue;
            for (int oy = 0; oy < g.oh; ++oy) {
              const int iy = oy * g.s - g.p + ky;
              if (iy < 0 || iy >= g.h) continue;
              const double* in = src + (static_cast<std::size_t>(oz) * g.oh + oy) * g.ow;
              double* dst = plane + (static_cast<std::size_t>(iz) * g.h + iy) * g.w;
              for (int ox = 0; ox < g.ow; ++ox) {
                const int ix = ox * g.s - g.p + kx;
                if (ix >= 0 && ix < g.w) dst[ix] += in[ox];
              }
            }
          }
        }
}

Var conv_impl(const Var& x, const Var& w, const Var& b, const Geometry& g, const Shape& out_shape) {
  const int rows = g.rows(), cols = g.cols();
  const bool keep_cols = w.requires_grad();
  std::vector<double> all_cols;
  if (keep_cols) all_cols.resize(static_cast<std::size_t>(g.groups) * rows * cols);
  std::vector<double> scratch(keep_cols ? 0 : static_cast<std::size_t>(rows) * cols);

  Tensor out(out_shape);
  const double* xd = x.value().data();
  const double* wd = w.value().data();
  for (int grp = 0; grp < g.groups; ++grp) {
    double* col = keep_cols ? all_cols.data() + static_cast<std::size_t>(grp) * rows * cols : scratch.data();
    im2col(xd + static_cast<std::size_t>(grp) * g.cin_g() * g.in_plane(), g, col);
    ConstMapMat wm(wd + static_cast<std::size_t>(grp) * g.cout_g() * rows, g.cout_g(), rows);
    ConstMapMat cm(col, rows, cols);
    MapMat om(out.data() + static_cast<std::size_t>(grp) * g.cout_g() * cols, g.cout_g(), cols);
    om.noalias() = wm * cm;
  }
  if (b.defined()) {
    for (int oc = 0; oc < g.cout; ++oc) {
      const double bv = b.value()[static_cast<std::size_t>(oc)];
      double* o = out.data() + static_cast<std::size_t>(oc) * cols;
      for (int i = 0; i < cols; ++i) o[i] += bv;
    }
  }

  std::vector<Var> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return make_result(std::move(out), inputs, [g, all_cols = std::move(all_cols)](Node& self) {
    const int rows = g.rows(), cols = g.cols();
    Tensor* gx = input_grad(self, 0);
    Tensor* gw = input_grad(self, 1);
    const double* wd = self.inputs[1]->value.data();
    std::vector<double> dcol(gx ? static_cast<std::size_t>(rows) * cols : 0);
    for (int grp = 0; grp < g.groups; ++grp) {
      ConstMapMat gy(self.grad.data() + static_cast<std::size_t>(grp) * g.cout_g() * cols, g.cout_g(), cols);
      if (gw) {
        ConstMapMat cm(all_cols.data() + static_cast<std::size_t>(grp) * rows * cols, rows, cols);
        MapMat gwm(gw->data() + static_cast<std::size_t>(grp) * g.cout_g() * rows, g.cout_g(), rows);
        gwm.noalias() += gy * cm.transpose();
      }
      if (gx) {
        ConstMapMat wm(wd + static_cast<std::size_t>(grp) * g.cout_g() * rows, g.cout_g(), rows);
        MapMat dc(dcol.data(), rows, cols);
        dc.noalias() = wm.transpose() * gy;
        col2im(dcol.data(), g, gx->data() + static_cast<std::size_t>(grp) * g.cin_g() * g.in_plane());
      }
    }
    if (self.inputs.size() > 2) {
      if (Tensor* gb = input_grad(self, 2)) {
        for (int oc = 0; oc < g.cout; ++oc) {
          double s = 0.0;
          const double* gy = self.grad.data() + static_cast<std::size_t>(oc) * cols;
          for (int i = 0; i < cols; ++i) s += gy[i];
          (*gb)[static_cast<std::size_t>(oc)] += s;
        }
      }
    }
  });
}

void check_common(const Geometry& g, const Var& b) {
  if (g.groups < 1 || g.cin % g.groups || g.cout % g.groups) throw ShapeError("conv: channels not divisible by groups");
  if (g.od < 1 || g.oh < 1 || g.ow < 1) throw ShapeError("conv: empty output");
  if (b.defined() && (b.value().rank() != 1 || b.dim(0) != g.cout)) throw ShapeError("conv: bias shape mismatch");
}

int out_extent(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, ConvSpec spec) {
  if (x.value().rank() != 3 || w.value().rank() != 4) {
    throw ShapeError("conv2d: x " + to_string(x.shape()) + ", w " + to_string(w.shape()));
  }
  Geometry g{x.dim(0), 1, x.dim(1), x.dim(2), w.dim(0), 1, w.dim(2), w.dim(3),
             1, spec.stride, 0, spec.pad, spec.groups, 1, 0, 0};
  g.oh = out_extent(g.h, g.kh, g.s, g.p);
  g.ow = out_extent(g.w, g.kw, g.s, g.p);
  check_common(g, b);
  if (w.dim(1) != g.cin_g()) throw ShapeError("conv2d: weight input channels " + std::to_string(w.dim(1)) + " != " + std::to_string(g.cin_g()));
  return conv_impl(x, w, b, g, {g.cout, g.oh, g.ow});
}

Var conv3d(const Var& x, const Var& w, const Var& b, ConvSpec spec) {
  if (x.value().rank() != 4 || w.value().rank() != 5) {
    throw ShapeError("conv3d: x " + to_string(x.shape()) + ", w " + to_string(w.shape()));
  }
  Geometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3), w.dim(4),
             spec.depth_stride, spec.stride, spec.depth_pad, spec.pad, spec.groups, 0, 0, 0};
  g.od = out_extent(g.d, g.kd, g.sd, g.pd);
  g.oh = out_extent(g.h, g.kh, g.s, g.p);
  g.ow = out_extent(g.w, g.kw, g.s, g.p);
  check_common(g, b);
  if (w.dim(1) != g.cin_g()) throw ShapeError("conv3d: weight input channels mismatch");
  return conv_impl(x, w, b, g, {g.cout, g.od, g.oh, g.ow});
}

}  // namespace sadm::nn
