#include "sadm/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "sadm/core/error.hpp"

namespace sadm::nn {
namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus_value(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// Unary op where the derivative is expressed through input x and output y.
template <class Fwd, class Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  Tensor out = a.value();
  for (double& v : out.storage()) v = fwd(v);
  return make_result(std::move(out), {a}, [deriv](Node& self) {
    Tensor* ga = input_grad(self, 0);
    if (!ga) return;
    const Tensor& x = self.inputs[0]->value;
    for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += self.grad[i] * deriv(x[i], self.value[i]);
  });
}

// Index of m broadcast against a: m either matches a or has leading extent 1.
bool broadcasts_leading(const Tensor& a, const Tensor& m) {
  if (a.shape() == m.shape()) return false;
  if (a.rank() != m.rank() || m.dim(0) != 1 || !std::equal(a.shape().begin() + 1, a.shape().end(), m.shape().begin() + 1)) {
    throw ShapeError("constant operand " + to_string(m.shape()) + " does not broadcast to " + to_string(a.shape()));
  }
  return true;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  return make_result(a.value() + b.value(), {a, b}, [](Node& self) {
    if (Tensor* g = input_grad(self, 0)) *g += self.grad;
    if (Tensor* g = input_grad(self, 1)) *g += self.grad;
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  return make_result(a.value() - b.value(), {a, b}, [](Node& self) {
    if (Tensor* g = input_grad(self, 0)) *g += self.grad;
    if (Tensor* g = input_grad(self, 1)) *g -= self.grad;
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    const Tensor& av = self.inputs[0]->value;
    const Tensor& bv = self.inputs[1]->value;
    if (Tensor* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    if (Tensor* g = input_grad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

Var scale(const Var& a, double s) {
  return make_result(a.value() * s, {a}, [s](Node& self) {
    if (Tensor* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * s;
  });
}

Var mul_const(const Var& a, const Tensor& m) {
  const bool bc = broadcasts_leading(a.value(), m);
  const std::size_t inner = m.size();
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[bc ? i % inner : i];
  return make_result(std::move(out), {a}, [m, bc, inner](Node& self) {
    if (Tensor* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * m[bc ? i % inner : i];
  });
}

Var add_const(const Var& a, const Tensor& m) {
  const bool bc = broadcasts_leading(a.value(), m);
  const std::size_t inner = m.size();
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += m[bc ? i % inner : i];
  return make_result(std::move(out), {a}, [](Node& self) {
    if (Tensor* g = input_grad(self, 0)) *g += self.grad;
  });
}

Var sigmoid(const Var& a) {
  return unary(a, sigm, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
               [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var softplus(const Var& a) {
  return unary(a, softplus_value, [](double x, double) { return sigm(x); });
}

Var sqrt(const Var& a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw NumericError("sqrt of non-positive value");
  }
  return unary(a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var add_channel_bias(const Var& x, const Var& b) {
  const int c = x.dim(0);
  if (b.value().rank() != 1 || b.dim(0) != c) throw ShapeError("bias " + to_string(b.shape()) + " vs input " + to_string(x.shape()));
  const std::size_t inner = x.value().size() / static_cast<std::size_t>(c);
  Tensor out = x.value();
  for (int k = 0; k < c; ++k)
    for (std::size_t i = 0; i < inner; ++i) out[k * inner + i] += b.value()[static_cast<std::size_t>(k)];
  return make_result(std::move(out), {x, b}, [c, inner](Node& self) {
    if (Tensor* g = input_grad(self, 0)) *g += self.grad;
    if (Tensor* g = input_grad(self, 1)) {
      for (int k = 0; k < c; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < inner; ++i) s += self.grad[k * inner + i];
        (*g)[static_cast<std::size_t>(k)] += s;
      }
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return make_result(std::move(out), {x}, [](Node& self) {
    if (Tensor* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

Var concat0(const std::vector<Var>& parts) {
  std::vector<Tensor> values;
  values.reserve(parts.size());
  for (const auto& p : parts) values.push_back(p.value());
  Tensor out = Tensor::concat0(values);
  return make_result(std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      const std::size_t n = self.inputs[k]->value.size();
      if (Tensor* g = input_grad(self, k))
        for (std::size_t i = 0; i < n; ++i) (*g)[i] += self.grad[offset + i];
      offset += n;
    }
  });
}

Var slice0(const Var& x, int start, int count) {
  Tensor out = x.value().slice0(start, count);
  const std::size_t offset = static_cast<std::size_t>(start) * (x.value().size() / static_cast<std::size_t>(x.dim(0)));
  return make_result(std::move(out), {x}, [offset](Node& self) {
    if (Tensor* g = input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[offset + i] += self.grad[i];
  });
}

Var stack1(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("stack1 needs at least one part");
  const Shape& s0 = parts.front().shape();
  if (s0.size() != 3) throw ShapeError("stack1 expects [C, H, W] parts");
  for (const auto& p : parts)
    if (p.shape() != s0) throw ShapeError("stack1 parts differ in shape");
  const int c = s0[0], n = static_cast<int>(parts.size());
  const std::size_t plane = static_cast<std::size_t>(s0[1]) * s0[2];
  Tensor out({c, n, s0[1], s0[2]});
  for (int k = 0; k < n; ++k)
    for (int ch = 0; ch < c; ++ch)
      std::copy_n(parts[static_cast<std::size_t>(k)].value().data() + ch * plane, plane,
                  out.data() + (static_cast<std::size_t>(ch) * n + k) * plane);
  return make_result(std::move(out), parts, [c, n, plane](Node& self) {
    for (int k = 0; k < n; ++k) {
      Tensor* g = input_grad(self, static_cast<std::size_t>(k));
      if (!g) continue;
      for (int ch = 0; ch < c; ++ch) {
        const double* src = self.grad.data() + (static_cast<std::size_t>(ch) * n + k) * plane;
        double* dst = g->data() + ch * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] += src[i];
      }
    }
  });
}

Var avg_pool(const Var& x, int factor) {
  const Tensor& in = x.value();
  const int r = in.rank();
  if (r < 2) throw ShapeError("avg_pool needs at least two axes");
  const int h = in.dim(r - 2), w = in.dim(r - 1);
  if (factor < 1 || h % factor || w % factor) throw ShapeError("avg_pool factor must divide H and W");
  const int ho = h / factor, wo = w / factor;
  const std::size_t planes = in.size() / (static_cast<std::size_t>(h) * w);
  Shape shape = in.shape();
  shape[static_cast<std::size_t>(r - 2)] = ho;
  shape[static_cast<std::size_t>(r - 1)] = wo;
  Tensor out(shape);
  const double norm = 1.0 / (factor * factor);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = in.data() + p * h * w;
    double* dst = out.data() + p * ho * wo;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) dst[(y / factor) * wo + xx / factor] += src[y * w + xx] * norm;
  }
  return make_result(std::move(out), {x}, [planes, h, w, ho, wo, factor, norm](Node& self) {
    Tensor* g = input_grad(self, 0);
    if (!g) return;
    for (std::size_t p = 0; p < planes; ++p) {
      const double* src = self.grad.data() + p * ho * wo;
      double* dst = g->data() + p * h * w;
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) dst[y * w + xx] += src[(y / factor) * wo + xx / factor] * norm;
    }
  });
}

namespace {

struct Tap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> resize_taps(int in, int out, int factor) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  for (int o = 0; o < out; ++o) {
    const double src = std::clamp((o + 0.5) / factor - 0.5, 0.0, static_cast<double>(in - 1));
    const int i0 = std::min(static_cast<int>(src), in - 1);
    const int i1 = std::min(i0 + 1, in - 1);
    taps[static_cast<std::size_t>(o)] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace

Var upsample_bilinear(const Var& x, int factor) {
  const Tensor& in = x.value();
  const int r = in.rank();
  const int h = in.dim(r - 2), w = in.dim(r - 1);
  const int ho = h * factor, wo = w * factor;
  const std::size_t planes = in.size() / (static_cast<std::size_t>(h) * w);
  auto ty = resize_taps(h, ho, factor);
  auto tx = resize_taps(w, wo, factor);
  Shape shape = in.shape();
  shape[static_cast<std::size_t>(r - 2)] = ho;
  shape[static_cast<std::size_t>(r - 1)] = wo;
  Tensor out(shape);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = in.data() + p * h * w;
    double* dst = out.data() + p * ho * wo;
    for (int y = 0; y < ho; ++y) {
      const Tap& a = ty[static_cast<std::size_t>(y)];
      for (int xx = 0; xx < wo; ++xx) {
        const Tap& b = tx[static_cast<std::size_t>(xx)];
        const double top = src[a.i0 * w + b.i0] * (1.0 - b.w1) + src[a.i0 * w + b.i1] * b.w1;
        const double bot = src[a.i1 * w + b.i0] * (1.0 - b.w1) + src[a.i1 * w + b.i1] * b.w1;
        dst[y * wo + xx] = top * (1.0 - a.w1) + bot * a.w1;
      }
    }
  }
  return make_result(std::move(out), {x}, [planes, h, w, ho, wo, ty = std::move(ty), tx = std::move(tx)](Node& self) {
    Tensor* g = input_grad(self, 0);
    if (!g) return;
    for (std::size_t p = 0; p < planes; ++p) {
      const double* src = self.grad.data() + p * ho * wo;
      double* dst = g->data() + p * h * w;
      for (int y = 0; y < ho; ++y) {
        const Tap& a = ty[static_cast<std::size_t>(y)];
        for (int xx = 0; xx < wo; ++xx) {
          const Tap& b = tx[static_cast<std::size_t>(xx)];
          const double gv = src[y * wo + xx];
          dst[a.i0 * w + b.i0] += gv * (1.0 - a.w1) * (1.0 - b.w1);
          dst[a.i0 * w + b.i1] += gv * (1.0 - a.w1) * b.w1;
          dst[a.i1 * w + b.i0] += gv * a.w1 * (1.0 - b.w1);
          dst[a.i1 * w + b.i1] += gv * a.w1 * b.w1;
        }
      }
    }
  });
}

Var softmax0(const Var& x) {
  const Tensor& in = x.value();
  const int c = in.dim(0);
  const std::size_t n = in.size() / static_cast<std::size_t>(c);
  Tensor out(in.shape());
  for (std::size_t p = 0; p < n; ++p) {
    double m = in[p];
    for (int k = 1; k < c; ++k) m = std::max(m, in[k * n + p]);
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += (out[k * n + p] = std::exp(in[k * n + p] - m));
    for (int k = 0; k < c; ++k) out[k * n + p] /= s;
  }
  return make_result(std::move(out), {x}, [c, n](Node& self) {
    Tensor* g = input_grad(self, 0);
    if (!g) return;
    const Tensor& y = self.value;
    for (std::size_t p = 0; p < n; ++p) {
      double dot = 0.0;
      for (int k = 0; k < c; ++k) dot += self.grad[k * n + p] * y[k * n + p];
      for (int k = 0; k < c; ++k) (*g)[k * n + p] += y[k * n + p] * (self.grad[k * n + p] - dot);
    }
  });
}

Var spatial_mean(const Var& x) {
  const int c = x.dim(0);
  const std::size_t n = x.value().size() / static_cast<std::size_t>(c);
  Tensor out({c});
  for (int k = 0; k < c; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x.value()[k * n + i];
    out[static_cast<std::size_t>(k)] = s / static_cast<double>(n);
  }
  return make_result(std::move(out), {x}, [c, n](Node& self) {
    Tensor* g = input_grad(self, 0);
    if (!g) return;
    for (int k = 0; k < c; ++k) {
      const double gv = self.grad[static_cast<std::size_t>(k)] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) (*g)[k * n + i] += gv;
    }
  });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const int m = w.dim(0), n = w.dim(1);
  if (x.value().size() != static_cast<std::size_t>(n)) throw ShapeError("linear: input " + to_string(x.shape()) + " vs weight " + to_string(w.shape()));
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    double s = b.defined() ? b.value()[static_cast<std::size_t>(i)] : 0.0;
    for (int j = 0; j < n; ++j) s += w.value()[static_cast<std::size_t>(i) * n + j] * x.value()[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s;
  }
  std::vector<Var> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  return make_result(std::move(out), inputs, [m, n](Node& self) {
    const Tensor& xv = self.inputs[0]->value;
    const Tensor& wv = self.inputs[1]->value;
    if (Tensor* g = input_grad(self, 0))
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) (*g)[static_cast<std::size_t>(j)] += wv[static_cast<std::size_t>(i) * n + j] * self.grad[static_cast<std::size_t>(i)];
    if (Tensor* g = input_grad(self, 1))
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) (*g)[static_cast<std::size_t>(i) * n + j] += self.grad[static_cast<std::size_t>(i)] * xv[static_cast<std::size_t>(j)];
    if (self.inputs.size() > 2)
      if (Tensor* g = input_grad(self, 2)) *g += self.grad;
  });
}

namespace {

void check_gates(const Tensor& gates, const Tensor& state, int groups) {
  if (groups < 1 || gates.dim(0) % (4 * groups) != 0) throw ShapeError("lstm gates channel count not divisible by 4*groups");
  if (state.dim(0) * 4 != gates.dim(0) || state.size() * 4 != gates.size()) {
    throw ShapeError("lstm state " + to_string(state.shape()) + " does not match gates " + to_string(gates.shape()));
  }
}

// Offsets of gate k (0=i,1=f,2=o,3=g) for state channel s in group g.
struct GateIndex {
  std::size_t plane;  // elements per channel
  int hidden;         // channels per group in the state
  std::size_t gate(int group, int k, int ch, std::size_t p) const {
    return (static_cast<std::size_t>(group * 4 * hidden + k * hidden + ch)) * plane + p;
  }
  std::size_t state(int group, int ch, std::size_t p) const {
    return (static_cast<std::size_t>(group * hidden + ch)) * plane + p;
  }
};

}  // namespace

Var lstm_cell_state(const Var& gates, const Var& c_prev, int groups) {
  check_gates(gates.value(), c_prev.value(), groups);
  const GateIndex ix{c_prev.value().size() / static_cast<std::size_t>(c_prev.dim(0)), c_prev.dim(0) / groups};
  const Tensor& gv = gates.value();
  const Tensor& cp = c_prev.value();
  Tensor out(cp.shape());
  for (int g = 0; g < groups; ++g)
    for (int ch = 0; ch < ix.hidden; ++ch)
      for (std::size_t p = 0; p < ix.plane; ++p) {
        const double i = sigm(gv[ix.gate(g, 0, ch, p)]);
        const double f = sigm(gv[ix.gate(g, 1, ch, p)]);
        const double cand = std::tanh(gv[ix.gate(g, 3, ch, p)]);
        out[ix.state(g, ch, p)] = f * cp[ix.state(g, ch, p)] + i * cand;
      }
  return make_result(std::move(out), {gates, c_prev}, [ix, groups](Node& self) {
    const Tensor& gv = self.inputs[0]->value;
    const Tensor& cp = self.inputs[1]->value;
    Tensor* gg = input_grad(self, 0);
    Tensor* gc = input_grad(self, 1);
    for (int g = 0; g < groups; ++g)
      for (int ch = 0; ch < ix.hidden; ++ch)
        for (std::size_t p = 0; p < ix.plane; ++p) {
          const std::size_t s = ix.state(g, ch, p);
          const double dc = self.grad[s];
          const double i = sigm(gv[ix.gate(g, 0, ch, p)]);
          const double f = sigm(gv[ix.gate(g, 1, ch, p)]);
          const double cand = std::tanh(gv[ix.gate(g, 3, ch, p)]);
          if (gg) {
            (*gg)[ix.gate(g, 0, ch, p)] += dc * cand * i * (1.0 - i);
            (*gg)[ix.gate(g, 1, ch, p)] += dc * cp[s] * f * (1.0 - f);
            (*gg)[ix.gate(g, 3, ch, p)] += dc * i * (1.0 - cand * cand);
          }
          if (gc) (*gc)[s] += dc * f;
        }
  });
}

Var lstm_hidden(const Var& gates, const Var& c, int groups) {
  check_gates(gates.value(), c.value(), groups);
  const GateIndex ix{c.value().size() / static_cast<std::size_t>(c.dim(0)), c.dim(0) / groups};
  const Tensor& gv = gates.value();
  const Tensor& cv = c.value();
  Tensor out(cv.shape());
  for (int g = 0; g < groups; ++g)
    for (int ch = 0; ch < ix.hidden; ++ch)
      for (std::size_t p = 0; p < ix.plane; ++p)
        out[ix.state(g, ch, p)] = sigm(gv[ix.gate(g, 2, ch, p)]) * std::tanh(cv[ix.state(g, ch, p)]);
  return make_result(std::move(out), {gates, c}, [ix, groups](Node& self) {
    const Tensor& gv = self.inputs[0]->value;
    const Tensor& cv = self.inputs[1]->value;
    Tensor* gg = input_grad(self, 0);
    Tensor* gc = input_grad(self, 1);
    for (int g = 0; g < groups; ++g)
      for (int ch = 0; ch < ix.hidden; ++ch)
        for (std::size_t p = 0; p < ix.plane; ++p) {
          const std::size_t s = ix.state(g, ch, p);
          const double o = sigm(gv[ix.gate(g, 2, ch, p)]);
          const double tc = std::tanh(cv[s]);
          if (gg) (*gg)[ix.gate(g, 2, ch, p)] += self.grad[s] * tc * o * (1.0 - o);
          if (gc) (*gc)[s] += self.grad[s] * o * (1.0 - tc * tc);
        }
  });
}

Var fuse_flows(const Var& probs, const Var& flows) {
  const Tensor& pv = probs.value();
  const Tensor& fv = flows.value();
  if (pv.rank() != 3 || fv.rank() != 3 || fv.dim(0) != 2 * pv.dim(0) || fv.dim(1) != pv.dim(1) || fv.dim(2) != pv.dim(2)) {
    throw ShapeError("fuse_flows: probs " + to_string(pv.shape()) + " vs flows " + to_string(fv.shape()));
  }
  const int c = pv.dim(0);
  const std::size_t n = static_cast<std::size_t>(pv.dim(1)) * pv.dim(2);
  Tensor out({2, pv.dim(1), pv.dim(2)});
  for (int k = 0; k < c; ++k)
    for (int d = 0; d < 2; ++d)
      for (std::size_t p = 0; p < n; ++p) out[d * n + p] += pv[k * n + p] * fv[(2 * k + d) * n + p];
  return make_result(std::move(out), {probs, flows}, [c, n](Node& self) {
    const Tensor& pv = self.inputs[0]->value;
    const Tensor& fv = self.inputs[1]->value;
    Tensor* gp = input_grad(self, 0);
    Tensor* gf = input_grad(self, 1);
    for (int k = 0; k < c; ++k)
      for (int d = 0; d < 2; ++d)
        for (std::size_t p = 0; p < n; ++p) {
          const double go = self.grad[d * n + p];
          if (gp) (*gp)[k * n + p] += go * fv[(2 * k + d) * n + p];
          if (gf) (*gf)[(2 * k + d) * n + p] += go * pv[k * n + p];
        }
  });
}

Var sum(const Var& x) {
  return make_result(Tensor({1}, {x.value().sum()}), {x}, [](Node& self) {
    if (Tensor* g = input_grad(self, 0))
      for (double& v : g->storage()) v += self.grad[0];
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var l1_sum(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "l1_sum");
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) s += std::abs(a.value()[i] - b.value()[i]);
  return make_result(Tensor({1}, {s}), {a, b}, [](Node& self) {
    const Tensor& av = self.inputs[0]->value;
    const Tensor& bv = self.inputs[1]->value;
    Tensor* ga = input_grad(self, 0);
    Tensor* gb = input_grad(self, 1);
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double d = av[i] - bv[i];
      const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      if (ga) (*ga)[i] += self.grad[0] * sgn;
      if (gb) (*gb)[i] -= self.grad[0] * sgn;
    }
  });
}

Var weighted_l1_sum(const Var& a, const Var& b, const Tensor& w) {
  require_same_shape(a.value(), b.value(), "weighted_l1_sum");
  const bool bc = broadcasts_leading(a.value(), w);
  const std::size_t inner = w.size();
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) s += w[bc ? i % inner : i] * std::abs(a.value()[i] - b.value()[i]);
  return make_result(Tensor({1}, {s}), {a, b}, [w, bc, inner](Node& self) {
    const Tensor& av = self.inputs[0]->value;
    const Tensor& bv = self.inputs[1]->value;
    Tensor* ga = input_grad(self, 0);
    Tensor* gb = input_grad(self, 1);
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double d = av[i] - bv[i];
      const double sgn = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * w[bc ? i % inner : i];
      if (ga) (*ga)[i] += self.grad[0] * sgn;
      if (gb) (*gb)[i] -= self.grad[0] * sgn;
    }
  });
}

Var l1_mean(const Var& a, const Var& b) { return scale(l1_sum(a, b), 1.0 / static_cast<double>(a.value().size())); }

Var squared_error_mean(const Var& a, double target) {
  const std::size_t n = a.value().size();
  double s = 0.0;
  for (double v : a.value().values()) s += (v - target) * (v - target);
  return make_result(Tensor({1}, {s / static_cast<double>(n)}), {a}, [target, n](Node& self) {
    Tensor* g = input_grad(self, 0);
    if (!g) return;
    const Tensor& av = self.inputs[0]->value;
    for (std::size_t i = 0; i < n; ++i) (*g)[i] += self.grad[0] * 2.0 * (av[i] - target) / static_cast<double>(n);
  });
}

Var weighted_cross_entropy(const Var& probs, const core::SemanticMap& labels, const Tensor& weights, double eps) {
  const Tensor& pv = probs.value();
  if (pv.rank() != 3 || pv.dim(0) != labels.num_classes() || pv.dim(1) != labels.height() || pv.dim(2) != labels.width()) {
    throw ShapeError("cross entropy: probs " + to_string(pv.shape()) + " vs labels");
  }
  if (weights.rank() != 2 || weights.dim(0) != labels.height() || weights.dim(1) != labels.width()) {
    throw ShapeError("cross entropy: weight map shape mismatch");
  }
  const std::size_t n = static_cast<std::size_t>(labels.height()) * labels.width();
  double s = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double q = pv[static_cast<std::size_t>(labels.labels()[p]) * n + p];
    s -= weights[p] * std::log(std::max(q, eps));
  }
  return make_result(Tensor({1}, {s}), {probs}, [labels, weights, eps, n](Node& self) {
    Tensor* g = input_grad(self, 0);
    if (!g) return;
    const Tensor& pv = self.inputs[0]->value;
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t idx = static_cast<std::size_t>(labels.labels()[p]) * n + p;
      if (pv[idx] > eps) (*g)[idx] -= self.grad[0] * weights[p] / pv[idx];
    }
  });
}

Var kl_standard_normal(const Var& mean_v, const Var& variance) {
  require_same_shape(mean_v.value(), variance.value(), "kl_standard_normal");
  const Tensor& u = mean_v.value();
  const Tensor& v = variance.value();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(v[i] > 0.0)) throw NumericError("KL: variance must be positive");
    s += 0.5 * (u[i] * u[i] + v[i] - 1.0 - std::log(v[i]));
  }
  return make_result(Tensor({1}, {s}), {mean_v, variance}, [](Node& self) {
    const Tensor& u = self.inputs[0]->value;
    const Tensor& v = self.inputs[1]->value;
    if (Tensor* g = input_grad(self, 0))
      for (std::size_t i = 0; i < u.size(); ++i) (*g)[i] += self.grad[0] * u[i];
    if (Tensor* g = input_grad(self, 1))
      for (std::size_t i = 0; i < v.size(); ++i) (*g)[i] += self.grad[0] * 0.5 * (1.0 - 1.0 / v[i]);
  });
}

}  // namespace sadm::nn
