#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sadm/core/types.hpp"
#include "sadm/inpaint/config.hpp"
#include "sadm/nn/ops.hpp"
#include "sadm/nn/params.hpp"
#include "sadm/warp/disocclusion.hpp"

namespace sadm::inpaint {

struct PartialConvResult {
  nn::Var features;
  Tensor validity;  // [1, Ho, Wo], 1 where any input in the window was valid
};

/// Mask-aware convolution: (W * (x . M)) * (in-image taps / valid taps) + b, with the scaled term
/// 0 where the window holds no valid input. Zero padding counts as neither, so full validity
/// reproduces conv2d exactly. `validity` is [1, H, W] in {0, 1}.
PartialConvResult partial_conv(const nn::Var& x, const Tensor& validity, const nn::Var& w, const nn::Var& b,
                               nn::ConvSpec spec);

/// Warped frame, its dis-occlusion mask and the predicted soft semantic map for one step.
struct InpaintInput {
  Tensor anchor;     // [3, H, W]
  Tensor mask;       // [1, H, W], 1 = dis-occluded
  Tensor condition;  // [C, H, W]
  void validate(int num_classes) const;
};

InpaintInput make_input(const core::Frame& warped, const warp::DisocclusionMask& mask, const core::SoftSemanticMap& condition);

/// Generator and both discriminators. Keys: "inpaint.gen.*", "inpaint.dframe.*", "inpaint.dclip.*".
/// The perceptual feature pyramid is regenerated from its seed and never trained or saved.
class InpaintModel {
 public:
  InpaintModel(InpaintConfig cfg, std::uint64_t seed);
  InpaintModel(InpaintConfig cfg, nn::ParamStore params);

  const InpaintConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const std::vector<Tensor>& perceptual_filters() const { return perceptual_; }

 private:
  InpaintConfig cfg_;
  nn::ParamStore params_;
  std::vector<Tensor> perceptual_;
};

/// One forward graph. Generator and discriminator parameters are bound separately so either
/// side can be frozen.
class InpaintPass {
 public:
  InpaintPass(const InpaintModel& model, bool train_generator, bool train_discriminators);
  /// Both sides fetch parameters through `shared`.
  InpaintPass(const InpaintModel& model, nn::Binding& shared);
  InpaintPass(const InpaintPass&) = delete;
  InpaintPass& operator=(const InpaintPass&) = delete;

  /// x~ = sigmoid(U-Net(anchor, mask, condition)), [3, H, W].
  nn::Var generate(const InpaintInput& in);
  /// Patch realness map of one frame conditioned on its semantic map.
  nn::Var discriminate_frame(const nn::Var& frame, const Tensor& condition);
  /// Patch realness map of K frames [3, H, W] and conditions [C, H, W].
  nn::Var discriminate_clip(const std::vector<nn::Var>& frames, const std::vector<Tensor>& conditions);
  /// Sum over scales of the mean L1 distance between fixed random features.
  nn::Var perceptual(const nn::Var& a, const Tensor& b);

  nn::Binding& generator_binding() { return *gen_; }
  nn::Binding& discriminator_binding() { return *disc_; }

 private:
  const InpaintModel& model_;
  std::optional<nn::Binding> own_gen_;
  std::optional<nn::Binding> own_disc_;
  nn::Binding* gen_;
  nn::Binding* disc_;
};

/// Mean over pixels and channels of (1 - mask) |pred - anchor|, summed over the given frames.
nn::Var reconstruction_loss(const std::vector<nn::Var>& pred, const std::vector<InpaintInput>& inputs);

/// LSGAN surrogates.
nn::Var lsgan_generator(const nn::Var& fake_score);
nn::Var lsgan_discriminator(const nn::Var& real_score, const nn::Var& fake_score);

struct InpaintLoss {
  nn::Var reconstruction;
  nn::Var perceptual;
  nn::Var adv_frame;
  nn::Var adv_clip;
  nn::Var total;
};

/// Generator objective over one horizon: reconstruction + lambda perceptual + gamma sum of
/// frame adversarial terms + eta clip adversarial term. Zero weights skip their terms.
InpaintLoss loss_inpaint(InpaintPass& pass, const std::vector<nn::Var>& pred, const std::vector<InpaintInput>& inputs,
                         const std::vector<Tensor>& real, const InpaintLossWeights& weights);

/// Discriminator objective for the same horizon; `pred` values are treated as constants.
nn::Var loss_discriminators(InpaintPass& pass, const std::vector<nn::Var>& pred, const std::vector<InpaintInput>& inputs,
                            const std::vector<Tensor>& real);

}  // namespace sadm::inpaint
