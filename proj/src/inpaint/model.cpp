#include "sadm/inpaint/model.hpp"

#include <algorithm>
#include <string>

#include "sadm/core/error.hpp"

namespace sadm::inpaint {

using nn::ConvSpec;
using nn::Var;

namespace {

constexpr double kSlope = 0.2;
constexpr double kInitScale = 0.1;
constexpr int kDiscStages = 3;

int stage_width(const InpaintConfig& c, int i) { return c.base_width * std::min(1 << i, 4); }
int disc_width(const InpaintConfig& c, int i) { return c.disc_width * std::min(1 << i, 4); }
int condition_channels(const InpaintConfig& c) { return c.use_condition ? c.num_classes : 0; }

std::string idx(const char* prefix, int i) { return std::string(prefix) + std::to_string(i); }

// Shapes of every trainable array, in a fixed order so initialization is reproducible.
std::vector<std::pair<std::string, Shape>> layout(const InpaintConfig& c) {
  std::vector<std::pair<std::string, Shape>> out;
  const int cc = condition_channels(c);
  int cin = 3;
  for (int i = 0; i < c.depth; ++i) {
    const int w = stage_width(c, i);
    out.push_back({idx("inpaint.gen.enc", i) + ".w", {w, cin, 3, 3}});
    out.push_back({idx("inpaint.gen.enc", i) + ".b", {w}});
    cin = w;
  }
  if (cc > 0) out.push_back({"inpaint.gen.cond.w", {stage_width(c, 0), cc, 3, 3}});
  for (int j = c.depth - 1; j >= 0; --j) {
    const int up = stage_width(c, j);
    const int skip = j > 0 ? stage_width(c, j - 1) : 3 + cc + 1;
    const int w = j > 0 ? stage_width(c, j - 1) : 3;
    out.push_back({idx("inpaint.gen.dec", j) + ".w", {w, up + skip, 3, 3}});
    out.push_back({idx("inpaint.gen.dec", j) + ".b", {w}});
  }
  cin = 3 + cc;
  for (int k = 0; k < kDiscStages; ++k) {
    const int w = disc_width(c, k);
    out.push_back({idx("inpaint.dframe.s", k) + ".w", {w, cin, 3, 3}});
    out.push_back({idx("inpaint.dframe.s", k) + ".b", {w}});
    cin = w;
  }
  out.push_back({"inpaint.dframe.out.w", {1, cin, 3, 3}});
  out.push_back({"inpaint.dframe.out.b", {1}});
  cin = 3 + cc;
  for (int k = 0; k < kDiscStages; ++k) {
    const int w = disc_width(c, k);
    out.push_back({idx("inpaint.dclip.s", k) + ".w", {w, cin, 3, 3, 3}});
    out.push_back({idx("inpaint.dclip.s", k) + ".b", {w}});
    cin = w;
  }
  out.push_back({"inpaint.dclip.out.w", {1, cin, 3, 3, 3}});
  out.push_back({"inpaint.dclip.out.b", {1}});
  return out;
}

std::vector<Tensor> make_perceptual(const InpaintConfig& c) {
  nn::Initializer init(c.perceptual_seed);
  std::vector<Tensor> out;
  for (int s = 0; s < c.perceptual_scales; ++s) out.push_back(init.uniform({c.perceptual_width, 3, 3, 3}, 0.5));
  return out;
}

bool is_bias(const std::string& name) { return name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0; }

Tensor expand_channels(const Tensor& m, int channels) {
  const std::size_t plane = m.size();
  Tensor out({channels, m.dim(1), m.dim(2)});
  for (int c = 0; c < channels; ++c) std::copy_n(m.data(), plane, out.data() + c * plane);
  return out;
}

}  // namespace

PartialConvResult partial_conv(const Var& x, const Tensor& validity, const Var& w, const Var& b, ConvSpec spec) {
  if (validity.rank() != 3 || validity.dim(0) != 1 || validity.dim(1) != x.dim(1) || validity.dim(2) != x.dim(2))
    throw ShapeError("partial_conv validity must be [1, H, W] matching the input");
  if (spec.groups != 1) throw ContractError("partial_conv supports groups = 1 only");
  const int h = x.dim(1), wd = x.dim(2), kh = w.dim(2), kw = w.dim(3);
  const int ho = (h + 2 * spec.pad - kh) / spec.stride + 1;
  const int wo = (wd + 2 * spec.pad - kw) / spec.stride + 1;
  Tensor ratio({1, ho, wo});
  Tensor next({1, ho, wo});
  for (int oy = 0; oy < ho; ++oy)
    for (int ox = 0; ox < wo; ++ox) {
      double valid = 0.0, inside = 0.0;
      for (int dy = 0; dy < kh; ++dy)
        for (int dx = 0; dx < kw; ++dx) {
          const int y = oy * spec.stride - spec.pad + dy, xx = ox * spec.stride - spec.pad + dx;
          if (y >= 0 && y < h && xx >= 0 && xx < wd) {
            valid += validity.at(0, y, xx);
            inside += 1.0;
          }
        }
      if (valid > 0.0) {
        ratio.at(0, oy, ox) = inside / valid;
        next.at(0, oy, ox) = 1.0;
      }
    }
  Var masked = nn::mul_const(x, validity);
  Var out = nn::mul_const(nn::conv2d(masked, w, Var(), spec), ratio);
  if (b.defined()) out = nn::add_channel_bias(out, b);
  return {out, std::move(next)};
}

void InpaintInput::validate(int num_classes) const {
  if (anchor.rank() != 3 || anchor.dim(0) != 3) throw ShapeError("inpaint anchor must be [3, H, W]");
  const int h = anchor.dim(1), w = anchor.dim(2);
  if (mask.shape() != Shape{1, h, w}) throw ShapeError("inpaint mask must be [1, H, W]");
  if (condition.shape() != Shape{num_classes, h, w}) throw ShapeError("inpaint condition must be [C, H, W]");
}

InpaintInput make_input(const core::Frame& warped, const warp::DisocclusionMask& mask, const core::SoftSemanticMap& condition) {
  if (mask.height() != warped.height() || mask.width() != warped.width())
    throw ShapeError("dis-occlusion mask size differs from the warped frame");
  InpaintInput in{warped.pixels, mask.as_tensor(), condition.probs};
  in.validate(condition.num_classes());
  return in;
}

InpaintModel::InpaintModel(InpaintConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  nn::Initializer init(seed);
  for (auto& [name, shape] : layout(cfg_)) {
    if (is_bias(name))
      params_.add(name, Tensor(shape));
    else
      params_.add(name, init.uniform(shape, kInitScale));
  }
  perceptual_ = make_perceptual(cfg_);
}

InpaintModel::InpaintModel(InpaintConfig cfg, nn::ParamStore params) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto expected = layout(cfg_);
  for (auto& [name, shape] : expected) {
    if (!params.contains(name)) throw ConfigError("inpaint checkpoint lacks " + name);
    if (params.get(name).shape() != shape) throw ShapeError("inpaint parameter " + name + " has the wrong shape");
    params_.add(name, params.get(name));
  }
  perceptual_ = make_perceptual(cfg_);
}

InpaintPass::InpaintPass(const InpaintModel& model, bool train_generator, bool train_discriminators)
    : model_(model),
      own_gen_(std::in_place, model.params(), train_generator),
      own_disc_(std::in_place, model.params(), train_discriminators),
      gen_(&*own_gen_),
      disc_(&*own_disc_) {}

InpaintPass::InpaintPass(const InpaintModel& model, nn::Binding& shared) : model_(model), gen_(&shared), disc_(&shared) {}

Var InpaintPass::generate(const InpaintInput& in) {
  const InpaintConfig& c = model_.config();
  in.validate(c.num_classes);
  const int h = in.anchor.dim(1), w = in.anchor.dim(2);
  const int factor = 1 << c.depth;
  if (h % factor || w % factor) throw ShapeError("inpaint frame size must be divisible by 2^depth");

  Tensor validity = in.mask;
  for (double& v : validity.storage()) v = 1.0 - v;
  Var masked_anchor = Var::constant(in.anchor);
  masked_anchor = nn::mul_const(masked_anchor, validity);
  Var cond = Var::constant(in.condition);

  const ConvSpec down{2, 1};
  std::vector<Var> skips;
  Var x = masked_anchor;
  Tensor valid = validity;
  for (int i = 0; i < c.depth; ++i) {
    auto r = partial_conv(x, valid, (*gen_)(idx("inpaint.gen.enc", i) + ".w"), (*gen_)(idx("inpaint.gen.enc", i) + ".b"), down);
    Var f = r.features;
    if (i == 0 && c.use_condition) f = nn::add(f, nn::conv2d(cond, (*gen_)("inpaint.gen.cond.w"), Var(), down));
    x = nn::leaky_relu(f, kSlope);
    valid = std::move(r.validity);
    skips.push_back(x);
  }

  std::vector<Var> input_skip{masked_anchor};
  if (c.use_condition) input_skip.push_back(cond);
  input_skip.push_back(Var::constant(in.mask));
  const Var top = nn::concat0(input_skip);

  Var d = skips.back();
  for (int j = c.depth - 1; j >= 0; --j) {
    Var up = nn::upsample_bilinear(d, 2);
    Var joined = nn::concat0({up, j > 0 ? skips[static_cast<std::size_t>(j - 1)] : top});
    d = nn::conv2d(joined, (*gen_)(idx("inpaint.gen.dec", j) + ".w"), (*gen_)(idx("inpaint.gen.dec", j) + ".b"), {1, 1});
    d = j > 0 ? nn::leaky_relu(d, kSlope) : nn::sigmoid(d);
  }
  return d;
}

Var InpaintPass::discriminate_frame(const Var& frame, const Tensor& condition) {
  const InpaintConfig& c = model_.config();
  Var x = c.use_condition ? nn::concat0({frame, Var::constant(condition)}) : frame;
  for (int k = 0; k < kDiscStages; ++k)
    x = nn::leaky_relu(nn::conv2d(x, (*disc_)(idx("inpaint.dframe.s", k) + ".w"), (*disc_)(idx("inpaint.dframe.s", k) + ".b"), {2, 1}),
                       kSlope);
  return nn::conv2d(x, (*disc_)("inpaint.dframe.out.w"), (*disc_)("inpaint.dframe.out.b"), {1, 1});
}

Var InpaintPass::discriminate_clip(const std::vector<Var>& frames, const std::vector<Tensor>& conditions) {
  const InpaintConfig& c = model_.config();
  if (frames.empty() || frames.size() != conditions.size()) throw ShapeError("clip discriminator needs one condition per frame");
  std::vector<Var> parts;
  for (std::size_t k = 0; k < frames.size(); ++k)
    parts.push_back(c.use_condition ? nn::concat0({frames[k], Var::constant(conditions[k])}) : frames[k]);
  Var x = nn::stack1(parts);
  ConvSpec spec;
  spec.stride = 2;
  spec.pad = 1;
  spec.depth_pad = 1;
  for (int k = 0; k < kDiscStages; ++k)
    x = nn::leaky_relu(nn::conv3d(x, (*disc_)(idx("inpaint.dclip.s", k) + ".w"), (*disc_)(idx("inpaint.dclip.s", k) + ".b"), spec),
                       kSlope);
  spec.stride = 1;
  return nn::conv3d(x, (*disc_)("inpaint.dclip.out.w"), (*disc_)("inpaint.dclip.out.b"), spec);
}

Var InpaintPass::perceptual(const Var& a, const Tensor& b) {
  const auto& filters = model_.perceptual_filters();
  Var total;
  Var bv = Var::constant(b);
  for (std::size_t s = 0; s < filters.size(); ++s) {
    const int f = 1 << s;
    Var fa = nn::tanh(nn::conv2d(f > 1 ? nn::avg_pool(a, f) : a, Var::constant(filters[s]), Var(), {1, 1}));
    Var fb = nn::tanh(nn::conv2d(f > 1 ? nn::avg_pool(bv, f) : bv, Var::constant(filters[s]), Var(), {1, 1}));
    Var term = nn::l1_mean(fa, fb);
    total = total.defined() ? nn::add(total, term) : term;
  }
  return total;
}

Var reconstruction_loss(const std::vector<Var>& pred, const std::vector<InpaintInput>& inputs) {
  if (pred.empty() || pred.size() != inputs.size()) throw ShapeError("reconstruction loss needs one input per prediction");
  Var total;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    Tensor keep = inputs[t].mask;
    for (double& v : keep.storage()) v = 1.0 - v;
    const double n = static_cast<double>(inputs[t].anchor.size());
    Var term = nn::scale(nn::weighted_l1_sum(pred[t], Var::constant(inputs[t].anchor), expand_channels(keep, 3)), 1.0 / n);
    total = total.defined() ? nn::add(total, term) : term;
  }
  return total;
}

Var lsgan_generator(const Var& fake_score) { return nn::squared_error_mean(fake_score, 1.0); }

Var lsgan_discriminator(const Var& real_score, const Var& fake_score) {
  return nn::add(nn::squared_error_mean(real_score, 1.0), nn::squared_error_mean(fake_score, 0.0));
}

InpaintLoss loss_inpaint(InpaintPass& pass, const std::vector<Var>& pred, const std::vector<InpaintInput>& inputs,
                         const std::vector<Tensor>& real, const InpaintLossWeights& weights) {
  if (real.size() != pred.size()) throw ShapeError("loss_inpaint needs one real frame per prediction");
  const Var zero = Var::constant(Tensor({1}));
  InpaintLoss out{reconstruction_loss(pred, inputs), zero, zero, zero, Var()};
  out.total = out.reconstruction;
  if (weights.lambda != 0.0) {
    for (std::size_t t = 0; t < pred.size(); ++t) out.perceptual = nn::add(out.perceptual, pass.perceptual(pred[t], real[t]));
    out.total = nn::add(out.total, nn::scale(out.perceptual, weights.lambda));
  }
  std::vector<Tensor> conditions;
  for (const auto& in : inputs) conditions.push_back(in.condition);
  if (weights.gamma != 0.0) {
    for (std::size_t t = 0; t < pred.size(); ++t)
      out.adv_frame = nn::add(out.adv_frame, lsgan_generator(pass.discriminate_frame(pred[t], conditions[t])));
    out.total = nn::add(out.total, nn::scale(out.adv_frame, weights.gamma));
  }
  if (weights.eta != 0.0) {
    out.adv_clip = lsgan_generator(pass.discriminate_clip(pred, conditions));
    out.total = nn::add(out.total, nn::scale(out.adv_clip, weights.eta));
  }
  return out;
}

Var loss_discriminators(InpaintPass& pass, const std::vector<Var>& pred, const std::vector<InpaintInput>& inputs,
                        const std::vector<Tensor>& real) {
  if (real.size() != pred.size() || inputs.size() != pred.size()) throw ShapeError("loss_discriminators size mismatch");
  std::vector<Var> fake, truth;
  std::vector<Tensor> conditions;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    fake.push_back(Var::constant(pred[t].value()));
    truth.push_back(Var::constant(real[t]));
    conditions.push_back(inputs[t].condition);
  }
  Var total;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    Var term = lsgan_discriminator(pass.discriminate_frame(truth[t], conditions[t]), pass.discriminate_frame(fake[t], conditions[t]));
    total = total.defined() ? nn::add(total, term) : term;
  }
  return nn::add(total, lsgan_discriminator(pass.discriminate_clip(truth, conditions), pass.discriminate_clip(fake, conditions)));
}

}  // namespace sadm::inpaint
