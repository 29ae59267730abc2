#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "../support/gradcheck.hpp"
#include "../support/random.hpp"
#include "sadm/core/error.hpp"
#include "sadm/nn/checkpoint.hpp"
#include "sadm/nn/ops.hpp"
#include "sadm/nn/optim.hpp"

using namespace sadm;
using namespace sadm::nn;
using sadm::testing::max_gradient_error;
using sadm::testing::random_tensor;

namespace {

// Projects an op output onto fixed random weights so every output element matters.
Var project(const Var& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum(mul_const(y, random_tensor(rng, y.shape())));
}

// Naive direct convolution oracle for [Cin,H,W] inputs.
Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad, int groups) {
  const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int cout = w.dim(0), k = w.dim(2);
  const int oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  const int cin_g = cin / groups, cout_g = cout / groups;
  Tensor out({cout, oh, ow});
  for (int oc = 0; oc < cout; ++oc) {
    const int g = oc / cout_g;
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double s = b.empty() ? 0.0 : b[static_cast<std::size_t>(oc)];
        for (int ic = 0; ic < cin_g; ++ic)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
              s += w[((static_cast<std::size_t>(oc) * cin_g + ic) * k + ky) * k + kx] * x.at(g * cin_g + ic, iy, ix);
            }
        out.at(oc, oy, ox) = s;
      }
  }
  return out;
}

}  // namespace

TEST_CASE("conv2d matches a direct loop for strides, padding and groups") {
  std::mt19937_64 rng(1);
  struct Case { int cin, cout, k, stride, pad, groups; };
  for (const Case c : {Case{3, 4, 3, 1, 1, 1}, Case{6, 9, 3, 2, 1, 3}, Case{4, 2, 1, 1, 0, 2}, Case{2, 3, 4, 2, 1, 1}}) {
    const Tensor x = random_tensor(rng, {c.cin, 7, 9});
    const Tensor w = random_tensor(rng, {c.cout, c.cin / c.groups, c.k, c.k});
    const Tensor b = random_tensor(rng, {c.cout});
    const Var y = conv2d(Var::constant(x), Var::constant(w), Var::constant(b), {c.stride, c.pad, c.groups});
    const Tensor want = naive_conv2d(x, w, b, c.stride, c.pad, c.groups);
    REQUIRE(y.shape() == want.shape());
    CHECK((y.value() - want).abs_max() <= 1e-12);
  }
}

TEST_CASE("conv3d with unit depth kernel equals per-slice conv2d") {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(rng, {2, 3, 5, 5});
  const Tensor w = random_tensor(rng, {3, 2, 1, 3, 3});
  const Var y = conv3d(Var::constant(x), Var::constant(w), Var(), {1, 1, 1, 1, 0});
  const Tensor w2 = w.reshaped({3, 2, 3, 3});
  for (int d = 0; d < 3; ++d) {
    Tensor slice({2, 5, 5});
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 25; ++i) slice[static_cast<std::size_t>(c * 25 + i)] = x[static_cast<std::size_t>((c * 3 + d) * 25 + i)];
    const Tensor want = naive_conv2d(slice, w2, Tensor(), 1, 1, 1);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 25; ++i)
        CHECK(y.value()[static_cast<std::size_t>((c * 3 + d) * 25 + i)] == doctest::Approx(want[static_cast<std::size_t>(c * 25 + i)]).epsilon(1e-12));
  }
}

TEST_CASE("gradients of every op agree with central differences") {
  std::mt19937_64 rng(3);
  const double tol = 1e-6;
  const Tensor a = random_tensor(rng, {2, 4, 4});
  const Tensor b = random_tensor(rng, {2, 4, 4});

  CHECK(max_gradient_error({a, b}, [](auto& v) { return project(add(v[0], v[1]), 1); }) < tol);
  CHECK(max_gradient_error({a, b}, [](auto& v) { return project(sub(v[0], v[1]), 1); }) < tol);
  CHECK(max_gradient_error({a, b}, [](auto& v) { return project(mul(v[0], v[1]), 1); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return project(sigmoid(v[0]), 2); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return project(tanh(v[0]), 2); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return project(softplus(v[0]), 2); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return project(leaky_relu(v[0], 0.2), 2); }) < tol);
  CHECK(max_gradient_error({random_tensor(rng, {2, 3}, 0.5, 2.0)}, [](auto& v) { return project(sqrt(v[0]), 2); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return project(softmax0(v[0]), 3); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return project(spatial_mean(v[0]), 3); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return project(avg_pool(v[0], 2), 4); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return project(upsample_bilinear(v[0], 4), 4); }) < tol);
  CHECK(max_gradient_error({a, random_tensor(rng, {2})}, [](auto& v) { return project(add_channel_bias(v[0], v[1]), 5); }) < tol);
  CHECK(max_gradient_error({a, b}, [](auto& v) { return project(concat0({v[0], v[1]}), 5); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return project(slice0(v[0], 1, 1), 5); }) < tol);
  CHECK(max_gradient_error({random_tensor(rng, {5}), random_tensor(rng, {3, 5}), random_tensor(rng, {3})},
                           [](auto& v) { return project(linear(v[0], v[1], v[2]), 6); }) < tol);
  CHECK(max_gradient_error({random_tensor(rng, {4, 6, 6}), random_tensor(rng, {6, 2, 3, 3}), random_tensor(rng, {6})},
                           [](auto& v) { return project(conv2d(v[0], v[1], v[2], {2, 1, 2}), 7); }) < tol);
  CHECK(max_gradient_error({random_tensor(rng, {2, 3, 4, 4}), random_tensor(rng, {3, 2, 3, 3, 3}), random_tensor(rng, {3})},
                           [](auto& v) { return project(conv3d(v[0], v[1], v[2], {2, 1, 1, 1, 1}), 7); }) < tol);

  const int groups = 2, hidden = 3;
  const Tensor gates = random_tensor(rng, {groups * 4 * hidden, 2, 2});
  const Tensor cprev = random_tensor(rng, {groups * hidden, 2, 2});
  CHECK(max_gradient_error({gates, cprev}, [](auto& v) { return project(lstm_cell_state(v[0], v[1], 2), 8); }) < tol);
  CHECK(max_gradient_error({gates, cprev}, [](auto& v) { return project(lstm_hidden(v[0], v[1], 2), 8); }) < tol);

  const Tensor probs = random_tensor(rng, {3, 4, 4}, 0.1, 1.0);
  const Tensor flows = random_tensor(rng, {6, 4, 4});
  CHECK(max_gradient_error({probs, flows}, [](auto& v) { return project(fuse_flows(v[0], v[1]), 9); }) < tol);

  // keep |a - b| away from the kink
  Tensor far = a;
  for (std::size_t i = 0; i < far.size(); ++i) far[i] = b[i] + (a[i] >= 0 ? 0.5 : -0.5) + a[i];
  CHECK(max_gradient_error({far, b}, [](auto& v) { return l1_sum(v[0], v[1]); }) < tol);
  const Tensor w = random_tensor(rng, {1, 4, 4}, 0.0, 2.0);
  CHECK(max_gradient_error({far, b}, [w](auto& v) { return weighted_l1_sum(v[0], v[1], w); }) < tol);
  CHECK(max_gradient_error({a}, [](auto& v) { return squared_error_mean(v[0], 1.0); }) < tol);

  std::mt19937_64 lrng(4);
  const auto labels = sadm::testing::random_map(lrng, 4, 4, 3);
  const Tensor weights = random_tensor(rng, {4, 4}, 1.0, 3.0);
  CHECK(max_gradient_error({probs}, [&](auto& v) { return weighted_cross_entropy(v[0], labels, weights, 1e-8); }) < tol);
  CHECK(max_gradient_error({a, random_tensor(rng, {2, 4, 4}, 0.2, 3.0)}, [](auto& v) { return kl_standard_normal(v[0], v[1]); }) < tol);
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(add(Var::constant(Tensor({2})), Var::constant(Tensor({3}))), ShapeError);
  CHECK_THROWS_AS(conv2d(Var::constant(Tensor({3, 4, 4})), Var::constant(Tensor({4, 2, 3, 3})), Var(), {1, 1, 2}), ShapeError);
  CHECK_THROWS_AS(avg_pool(Var::constant(Tensor({1, 5, 4})), 2), ShapeError);
}

TEST_CASE("learning-rate schedule") {
  CHECK(step_decay_lr(0.001, 0.8, 20, 0) == 0.001);
  CHECK(step_decay_lr(0.001, 0.8, 20, 19) == 0.001);
  CHECK(step_decay_lr(0.001, 0.8, 20, 20) == 0.0008);
  CHECK(step_decay_lr(0.001, 0.8, 20, 40) == doctest::Approx(0.00064).epsilon(1e-15));
}

TEST_CASE("Adam minimizes a quadratic") {
  ParamStore params;
  params.add("x", Tensor({2}, {3.0, -2.0}));
  Adam adam;
  for (int i = 0; i < 2000; ++i) {
    Binding bind(params, true);
    backward(sum(mul(bind("x"), bind("x"))));
    adam.step(params, bind.gradients(), 0.01);
  }
  CHECK(params.get("x").abs_max() < 1e-2);
  CHECK(adam.steps() == 2000);
}

TEST_CASE("checkpoint archive round trip") {
  Archive a;
  a.metadata["epoch"] = 3;
  a.metadata["config"] = {{"hidden", 8}};
  a.arrays["dynamics.w"] = Tensor({2, 3}, {1, 2, 3, 4, 5, 6});
  a.arrays["adam.steps"] = Tensor({1}, {7});
  const auto path = std::filesystem::temp_directory_path() / "sadm_test_ckpt.bin";
  save_archive(path, a);
  const Archive b = load_archive(path);
  CHECK(b.metadata == a.metadata);
  REQUIRE(b.arrays.size() == 2);
  CHECK(b.arrays.at("dynamics.w").shape() == Shape{2, 3});
  CHECK(b.arrays.at("dynamics.w").storage() == a.arrays.at("dynamics.w").storage());
  CHECK(b.with_prefix("dynamics.").count("w") == 1);
}
