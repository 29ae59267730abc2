#pragma once

#include <vector>

#include "sadm/core/types.hpp"
#include "sadm/nn/autograd.hpp"

namespace sadm::nn {

// Elementwise. Operands of binary ops must have identical shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// a * m for a constant m; m may have leading extent 1 and is then broadcast along axis 0.
Var mul_const(const Var& a, const Tensor& m);
Var add_const(const Var& a, const Tensor& m);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var softplus(const Var& a);
Var sqrt(const Var& a);

/// x [C, ...] + b [C] broadcast over the trailing axes.
Var add_channel_bias(const Var& x, const Var& b);

Var reshape(const Var& x, Shape shape);
Var concat0(const std::vector<Var>& parts);
Var slice0(const Var& x, int start, int count);
/// N tensors [C, H, W] -> [C, N, H, W].
Var stack1(const std::vector<Var>& parts);

struct ConvSpec {
  int stride = 1;
  int pad = 0;
  int groups = 1;
  int depth_stride = 1;
  int depth_pad = 0;
};

/// Grouped 2-D convolution (cross-correlation). x [Cin, H, W], w [Cout, Cin/groups, kh, kw],
/// b [Cout] or undefined.
Var conv2d(const Var& x, const Var& w, const Var& b, ConvSpec spec = {});
/// Grouped 3-D convolution. x [Cin, D, H, W], w [Cout, Cin/groups, kd, kh, kw].
Var conv3d(const Var& x, const Var& w, const Var& b, ConvSpec spec = {});

/// Mean over non-overlapping factor x factor blocks of the last two axes.
Var avg_pool(const Var& x, int factor);
/// Bilinear resize of the last two axes by an integer factor, half-pixel centres, edge clamp.
Var upsample_bilinear(const Var& x, int factor);

/// Softmax across axis 0 of [C, H, W] at every pixel.
Var softmax0(const Var& x);
/// [C, H, W] -> [C] spatial mean.
Var spatial_mean(const Var& x);
/// W [M, N] x [N] + b [M].
Var linear(const Var& x, const Var& w, const Var& b);

/// Grouped LSTM cell state. gates [G*4*Hd, ...] laid out per group as (input, forget, output, cell);
/// c_prev [G*Hd, ...]. Returns c = sig(f) * c_prev + sig(i) * tanh(g).
Var lstm_cell_state(const Var& gates, const Var& c_prev, int groups);
/// h = sig(o) * tanh(c) for the same gate layout.
Var lstm_hidden(const Var& gates, const Var& c, int groups);

/// Per-pixel convex combination: probs [C, H, W], flows [2C, H, W] -> [2, H, W].
Var fuse_flows(const Var& probs, const Var& flows);

Var sum(const Var& x);
Var mean(const Var& x);
/// Sum of |a - b|.
Var l1_sum(const Var& a, const Var& b);
/// Sum of w * |a - b| for a constant weight w broadcast along axis 0 if needed.
Var weighted_l1_sum(const Var& a, const Var& b, const Tensor& w);
/// Mean of |a - b|.
Var l1_mean(const Var& a, const Var& b);
/// Mean of (a - target)^2.
Var squared_error_mean(const Var& a, double target);
/// Sum over pixels of w(p) * -log(max(probs[label(p)](p), eps)).
Var weighted_cross_entropy(const Var& probs, const core::SemanticMap& labels, const Tensor& weights, double eps);
/// Sum of 0.5 (u^2 + v - 1 - ln v): KL(N(u, v) || N(0, 1)) per element.
Var kl_standard_normal(const Var& mean, const Var& variance);

}  // namespace sadm::nn
