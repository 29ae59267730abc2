#include <doctest.h>

#include <cmath>

#include "../support/param_gradcheck.hpp"
#include "../support/random.hpp"
#include "sadm/core/error.hpp"
#include "sadm/inpaint/model.hpp"
#include "sadm/nn/optim.hpp"

using namespace sadm;
using namespace sadm::inpaint;
using nn::Var;

namespace {

InpaintConfig tiny(int classes = 2) {
  InpaintConfig c;
  c.num_classes = classes;
  c.base_width = 3;
  c.depth = 2;
  c.disc_width = 2;
  c.perceptual_scales = 2;
  c.perceptual_width = 3;
  return c;
}

InpaintInput random_input(std::mt19937_64& rng, int h, int w, int classes, double hole_fraction = 0.3) {
  InpaintInput in{testing::random_tensor(rng, {3, h, w}, 0.0, 1.0), Tensor({1, h, w}), Tensor({classes, h, w})};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : in.mask.storage()) v = u(rng) < hole_fraction ? 1.0 : 0.0;
  std::uniform_int_distribution<int> pick(0, classes - 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) in.condition.at(pick(rng), y, x) = 1.0;
  return in;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("partial conv with full validity is an ordinary conv") {
  std::mt19937_64 rng(1);
  const Var x = Var::constant(testing::random_tensor(rng, {3, 9, 7}));
  const Var w = Var::constant(testing::random_tensor(rng, {4, 3, 3, 3}));
  const Var b = Var::constant(testing::random_tensor(rng, {4}));
  Tensor ones({1, 9, 7});
  ones.fill(1.0);
  for (nn::ConvSpec spec : {nn::ConvSpec{1, 1}, nn::ConvSpec{2, 1}, nn::ConvSpec{1, 0}}) {
    auto r = partial_conv(x, ones, w, b, spec);
    const Var ref = nn::conv2d(x, w, b, spec);
    REQUIRE(r.features.shape() == ref.shape());
    CHECK(max_abs_diff(r.features.value(), ref.value()) <= 1e-12);
  }
}

TEST_CASE("partial conv renormalizes by the valid count and propagates validity") {
  // Constant input: every window with at least one valid tap sees the same value after rescaling.
  Tensor xv({1, 6, 6});
  xv.fill(2.0);
  Tensor valid({1, 6, 6});
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 3; ++x) valid.at(0, y, x) = 1.0;
  Tensor wv({1, 1, 3, 3});
  wv.fill(1.0);
  auto r = partial_conv(Var::constant(xv), valid, Var::constant(wv), Var::constant(Tensor({1}, {0.5})), {1, 1});
  for (int y = 1; y < 5; ++y) {
    CHECK(r.features.value().at(0, y, 1) == doctest::Approx(18.5));
    CHECK(r.features.value().at(0, y, 3) == doctest::Approx(18.5));  // one valid column in the window
    CHECK(r.features.value().at(0, y, 4) == doctest::Approx(0.5));   // no valid input: bias only
    CHECK(r.validity.at(0, y, 3) == 1.0);
    CHECK(r.validity.at(0, y, 4) == 0.0);
  }
  CHECK_THROWS_AS(partial_conv(Var::constant(xv), Tensor({1, 5, 6}), Var::constant(wv), Var(), {1, 1}), ShapeError);
}

TEST_CASE("partial conv ignores values under the hole") {
  std::mt19937_64 rng(2);
  Tensor a = testing::random_tensor(rng, {2, 8, 8});
  Tensor valid({1, 8, 8});
  valid.fill(1.0);
  for (int y = 2; y < 6; ++y)
    for (int x = 2; x < 6; ++x) valid.at(0, y, x) = 0.0;
  Tensor b = a;
  for (int c = 0; c < 2; ++c)
    for (int y = 2; y < 6; ++y)
      for (int x = 2; x < 6; ++x) b.at(c, y, x) = 100.0;
  const Var w = Var::constant(testing::random_tensor(rng, {3, 2, 3, 3}));
  auto ra = partial_conv(Var::constant(a), valid, w, Var(), {2, 1});
  auto rb = partial_conv(Var::constant(b), valid, w, Var(), {2, 1});
  CHECK(max_abs_diff(ra.features.value(), rb.features.value()) == 0.0);
}

TEST_CASE("generator output shape, range and hole independence") {
  std::mt19937_64 rng(3);
  const InpaintModel model(tiny(), 7);
  InpaintInput in = random_input(rng, 16, 16, 2);
  InpaintPass pass(model, false, false);
  const Var out = pass.generate(in);
  REQUIRE(out.shape() == Shape{3, 16, 16});
  for (double v : out.value().values()) CHECK((v > 0.0 && v < 1.0));

  // Fully dis-occluded: the anchor must not matter.
  in.mask.fill(1.0);
  const Tensor first = pass.generate(in).value();
  in.anchor = testing::random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
  CHECK(max_abs_diff(first, pass.generate(in).value()) == 0.0);

  InpaintInput odd = random_input(rng, 10, 10, 2);
  CHECK_THROWS_AS(pass.generate(odd), ShapeError);
  InpaintInput wrong = random_input(rng, 16, 16, 3);
  CHECK_THROWS_AS(pass.generate(wrong), ShapeError);
}

TEST_CASE("condition switch") {
  std::mt19937_64 rng(4);
  InpaintInput in = random_input(rng, 16, 16, 2);
  InpaintInput other = in;
  for (double& v : other.condition.storage()) v = 1.0 - v;

  const InpaintModel with(tiny(), 7);
  InpaintPass pw(with, false, false);
  CHECK(max_abs_diff(pw.generate(in).value(), pw.generate(other).value()) > 0.0);

  InpaintConfig cfg = tiny();
  cfg.use_condition = false;
  const InpaintModel without(cfg, 7);
  CHECK_FALSE(without.params().contains("inpaint.gen.cond.w"));
  InpaintPass po(without, false, false);
  CHECK(max_abs_diff(po.generate(in).value(), po.generate(other).value()) == 0.0);
}

TEST_CASE("discriminator output shapes") {
  std::mt19937_64 rng(5);
  const InpaintModel model(tiny(), 7);
  InpaintPass pass(model, false, false);
  InpaintInput in = random_input(rng, 16, 16, 2);
  const Var frame = Var::constant(in.anchor);
  CHECK(pass.discriminate_frame(frame, in.condition).shape() == Shape{1, 2, 2});
  const Var clip = pass.discriminate_clip({frame, frame, frame}, {in.condition, in.condition, in.condition});
  CHECK(clip.shape() == Shape{1, 3, 2, 2});
  CHECK_THROWS_AS(pass.discriminate_clip({frame}, {}), ShapeError);
}

TEST_CASE("reconstruction term matches a loop oracle") {
  std::mt19937_64 rng(6);
  std::vector<InpaintInput> inputs{random_input(rng, 5, 4, 2), random_input(rng, 5, 4, 2)};
  std::vector<Var> pred{Var::constant(testing::random_tensor(rng, {3, 5, 4}, 0.0, 1.0)),
                        Var::constant(testing::random_tensor(rng, {3, 5, 4}, 0.0, 1.0))};
  double expect = 0.0;
  for (std::size_t t = 0; t < 2; ++t) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 4; ++x)
          s += (1.0 - inputs[t].mask.at(0, y, x)) * std::abs(pred[t].value().at(c, y, x) - inputs[t].anchor.at(c, y, x));
    expect += s / 60.0;
  }
  CHECK(std::abs(reconstruction_loss(pred, inputs).item() - expect) <= 1e-12);
}

TEST_CASE("lsgan surrogates") {
  const Var real = Var::constant(Tensor({2}, {1.0, 0.5}));
  const Var fake = Var::constant(Tensor({2}, {0.0, 0.5}));
  CHECK(lsgan_generator(fake).item() == doctest::Approx((1.0 + 0.25) / 2));
  CHECK(lsgan_discriminator(real, fake).item() == doctest::Approx(0.125 + 0.125));
}

TEST_CASE("perceptual proxy is a distance") {
  std::mt19937_64 rng(8);
  const InpaintModel model(tiny(), 7);
  InpaintPass pass(model, false, false);
  const Tensor a = testing::random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
  const Tensor b = testing::random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
  CHECK(pass.perceptual(Var::constant(a), a).item() == 0.0);
  CHECK(pass.perceptual(Var::constant(a), b).item() > 0.0);
  // Fixed across instances.
  const InpaintModel again(tiny(), 99);
  CHECK(model.perceptual_filters()[1].storage() == again.perceptual_filters()[1].storage());
}

TEST_CASE("adversarial gradients reach the generator through both discriminators") {
  std::mt19937_64 rng(9);
  InpaintModel model(tiny(), 11);
  std::vector<InpaintInput> inputs{random_input(rng, 16, 16, 2), random_input(rng, 16, 16, 2)};
  std::vector<Tensor> real{testing::random_tensor(rng, {3, 16, 16}, 0.0, 1.0), testing::random_tensor(rng, {3, 16, 16}, 0.0, 1.0)};

  for (bool frame_only : {true, false}) {
    InpaintLossWeights weights{0.0, frame_only ? 1.0 : 0.0, frame_only ? 0.0 : 1.0};
    auto loss = [&](nn::Binding& b) {
      InpaintPass pass(model, b);
      std::vector<Var> pred{pass.generate(inputs[0]), pass.generate(inputs[1])};
      return loss_inpaint(pass, pred, inputs, real, weights).total;
    };
    nn::Binding probe(model.params(), true);
    nn::backward(loss(probe));
    const auto grads = probe.gradients();
    double gen_norm = 0.0;
    for (const auto& [name, g] : grads)
      if (name.rfind("inpaint.gen.", 0) == 0)
        for (double v : g.values()) gen_norm += v * v;
    CHECK(gen_norm > 0.0);

    const auto report = testing::check_param_gradients(model.params(), loss, 3, 17, 1e-5, 1e-3);
    INFO("worst " << report.worst << " at " << report.worst_name);
    CHECK(report.pass_rate() >= 0.98);
  }
}

TEST_CASE("toy inpainting: the non-adversarial loss falls within 50 iterations") {
  std::mt19937_64 rng(10);
  InpaintModel model(tiny(), 12);
  // Smooth target so the hole is predictable from its surroundings.
  Tensor target({3, 16, 16});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) target.at(c, y, x) = 0.2 + 0.6 * (c == 0 ? x / 15.0 : y / 15.0);
  InpaintInput in{target, Tensor({1, 16, 16}), Tensor({2, 16, 16})};
  for (int y = 5; y < 10; ++y)
    for (int x = 5; x < 10; ++x) in.mask.at(0, y, x) = 1.0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) in.condition.at(x < 8 ? 0 : 1, y, x) = 1.0;
  const std::vector<InpaintInput> inputs{in};
  const std::vector<Tensor> real{target};
  const InpaintLossWeights weights{2.0, 2.0, 1.0};

  nn::Adam gen_opt, disc_opt;
  double first = 0.0, last = 0.0;
  for (int it = 0; it < 50; ++it) {
    InpaintPass gpass(model, true, false);
    std::vector<Var> pred{gpass.generate(in)};
    const InpaintLoss l = loss_inpaint(gpass, pred, inputs, real, weights);
    const double plain = l.reconstruction.item() + weights.lambda * l.perceptual.item();
    if (it == 0) first = plain;
    last = plain;
    nn::backward(l.total);
    gen_opt.step(model.params(), gpass.generator_binding().gradients(), 2e-3);

    InpaintPass dpass(model, false, true);
    nn::backward(loss_discriminators(dpass, pred, inputs, real));
    disc_opt.step(model.params(), dpass.discriminator_binding().gradients(), 2e-3);
  }
  INFO(first << " -> " << last);
  CHECK(last < first);
}

TEST_CASE("checkpoint store constructor validates") {
  InpaintModel model(tiny(), 3);
  InpaintModel copy(tiny(), model.params());
  CHECK(copy.params().count() == model.params().count());
  nn::ParamStore partial = model.params();
  partial.entries().erase("inpaint.gen.enc0.w");
  CHECK_THROWS_AS(InpaintModel(tiny(), partial), ConfigError);
  CHECK_THROWS_AS(InpaintModel(tiny(3), model.params()), ShapeError);
}
