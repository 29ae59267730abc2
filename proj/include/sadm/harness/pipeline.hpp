#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "sadm/dynamics/model.hpp"
#include "sadm/harness/config.hpp"
#include "sadm/harness/train.hpp"
#include "sadm/inpaint/model.hpp"
#include "sadm/warp/warp.hpp"

namespace sadm::harness {

/// One predicted future step.
struct PipelineStep {
  core::SoftSemanticMap map;
  core::FlowField flow;
  core::Frame warped;
  warp::DisocclusionMask mask;
  /// Inpainted frame, or the warped frame when no inpainter is given.
  core::Frame output;
};

struct PipelineOptions {
  dynamics::Mode mode = dynamics::Mode::kDeterministic;
  std::uint64_t seed = 0;
  std::vector<int> route;
  warp::DisocclusionOptions detection;
};

/// Rolls the dynamics forward `horizon` steps and synthesizes frames recursively: each step
/// warps the previous output (the last observed frame first) with the predicted flow, detects
/// dis-occlusion against the previous map and inpaints.
std::vector<PipelineStep> run_pipeline(const dynamics::DynamicsModel& dyn, const inpaint::InpaintModel* inp,
                                       const core::Clip& past, int horizon, const PipelineOptions& opts = {});

struct InpaintEpochLog {
  int epoch = 0;
  double lr = 0.0;
  double generator = 0.0;
  double reconstruction = 0.0;
  double perceptual = 0.0;
  double adv_frame = 0.0;
  double adv_clip = 0.0;
  double discriminator = 0.0;
};

nlohmann::json to_json(const InpaintEpochLog& e);

struct InpaintTrainState {
  inpaint::InpaintModel model;
  nn::Adam generator_adam;
  nn::Adam discriminator_adam;
  int epoch = 0;
  std::vector<InpaintEpochLog> log;
};

struct InpaintTrainHooks {
  std::filesystem::path checkpoint;
  std::function<void(const InpaintEpochLog&)> on_epoch;
  int max_epochs = -1;
};

/// Stage 2: trains generator and discriminators with the dynamics model frozen. Loss weights
/// come from config.lambda, gamma and eta.
void train_inpaint(const TrainConfig& config, const dynamics::DynamicsModel& dyn, InpaintTrainState& state,
                   const std::vector<core::Clip>& data, const InpaintTrainHooks& hooks = {});

/// Archive holding the frozen dynamics parameters, the inpainting parameters and both optimizer
/// states ("gen.adam.", "disc.adam."). Metadata {"stage": "inpaint", "epoch", "config",
/// "dynamics_config", "train", "log"}.
nn::Archive inpaint_archive(const dynamics::DynamicsModel& dyn, const InpaintTrainState& state, const TrainConfig& config);
void save_inpaint(const std::filesystem::path& path, const dynamics::DynamicsModel& dyn, const InpaintTrainState& state,
                  const TrainConfig& config);
InpaintTrainState load_inpaint(const std::filesystem::path& path);

}  // namespace sadm::harness
