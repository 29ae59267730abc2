#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sadm/harness/pipeline.hpp"

namespace sadm::harness {

struct HorizonMetrics {
  int step = 0;  // 1-based: t+step
  double psnr = 0.0;
  double ssim = 0.0;
  double ms_ssim = 0.0;
  double miou = 0.0;
  double epe = 0.0;
  /// EPE restricted to pixels within `band_radius` of a ground-truth class boundary.
  double boundary_epe = 0.0;
  /// Mean fraction of pixels flagged as dis-occluded.
  double disoccluded = 0.0;
};

struct EvalReport {
  std::string architecture;
  int clips = 0;
  int band_radius = 3;
  std::vector<HorizonMetrics> steps;
};

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);
/// Fixed-width text table, one row per horizon step.
std::string format_table(const EvalReport& r);

struct EvalOptions {
  PipelineOptions pipeline;
  int band_radius = 3;
};

/// Runs the full pipeline on every clip and aggregates per-step metrics: frame metrics and
/// dis-occlusion rates are averaged over clips, mIoU comes from the pooled confusion matrix
/// and EPE from pooled pixel sums.
EvalReport evaluate(const dynamics::DynamicsModel& dyn, const inpaint::InpaintModel* inp,
                    const std::vector<core::Clip>& clips, const EvalOptions& opts = {});

}  // namespace sadm::harness
