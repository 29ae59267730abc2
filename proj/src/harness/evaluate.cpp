#include "sadm/harness/evaluate.hpp"

#include <cstdio>

#include "sadm/core/error.hpp"
#include "sadm/harness/metrics.hpp"

namespace sadm::harness {

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"step", s.step},
                     {"psnr", s.psnr},
                     {"ssim", s.ssim},
                     {"ms_ssim", s.ms_ssim},
                     {"miou", s.miou},
                     {"epe", s.epe},
                     {"boundary_epe", s.boundary_epe},
                     {"disoccluded", s.disoccluded}});
  return {{"architecture", r.architecture}, {"clips", r.clips}, {"band_radius", r.band_radius}, {"steps", steps}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.architecture = j.at("architecture");
  r.clips = j.at("clips");
  r.band_radius = j.at("band_radius");
  for (const auto& s : j.at("steps"))
    r.steps.push_back({s.at("step"), s.at("psnr"), s.at("ssim"), s.at("ms_ssim"), s.at("miou"), s.at("epe"),
                       s.at("boundary_epe"), s.at("disoccluded")});
  return r;
}

std::string format_table(const EvalReport& r) {
  std::string out = r.architecture + ", " + std::to_string(r.clips) + " clips\n";
  out += " step    PSNR    SSIM  MS-SSIM    mIoU     EPE  bandEPE  disocc\n";
  char line[128];
  for (const auto& s : r.steps) {
    std::snprintf(line, sizeof line, "  t+%-2d %6.2f  %6.4f   %6.4f  %6.4f  %6.4f   %6.4f  %6.4f\n", s.step, s.psnr, s.ssim,
                  s.ms_ssim, s.miou, s.epe, s.boundary_epe, s.disoccluded);
    out += line;
  }
  return out;
}

EvalReport evaluate(const dynamics::DynamicsModel& dyn, const inpaint::InpaintModel* inp,
                    const std::vector<core::Clip>& clips, const EvalOptions& opts) {
  if (clips.empty()) throw ConfigError("evaluate: no clips");
  const auto& cfg = dyn.config();
  const int horizon = cfg.horizon;
  EvalReport report;
  report.architecture = cfg.architecture == dynamics::Architecture::kSemanticAware ? "semantic-aware" : "single-class";
  report.clips = static_cast<int>(clips.size());
  report.band_radius = opts.band_radius;

  std::vector<ConfusionMatrix> confusion(static_cast<std::size_t>(horizon), ConfusionMatrix(cfg.num_classes));
  std::vector<EpeAccumulator> epe(static_cast<std::size_t>(horizon)), band(static_cast<std::size_t>(horizon));
  report.steps.resize(static_cast<std::size_t>(horizon));
  for (const auto& clip : clips) {
    if (clip.observed_len != cfg.observed_len || clip.length() < cfg.observed_len + horizon)
      throw ShapeError("evaluate: clip length does not match the model's T and K");
    const auto steps = run_pipeline(dyn, inp, clip, horizon, opts.pipeline);
    for (int k = 0; k < horizon; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const auto t = static_cast<std::size_t>(clip.observed_len + k);
      auto& m = report.steps[i];
      const Tensor& truth = clip.frames[t].pixels;
      m.psnr += psnr(steps[i].output.pixels, truth);
      m.ssim += ssim(steps[i].output.pixels, truth);
      m.ms_ssim += ms_ssim(steps[i].output.pixels, truth);
      m.disoccluded += static_cast<double>(steps[i].mask.count()) / static_cast<double>(truth.dim(1) * truth.dim(2));
      confusion[i].add(steps[i].map.argmax(), clip.maps[t]);
      epe[i].add(steps[i].flow, clip.flows[t]);
      const auto near = boundary_band(clip.maps[t], opts.band_radius);
      band[i].add(steps[i].flow, clip.flows[t], &near);
    }
  }
  const double n = static_cast<double>(clips.size());
  for (int k = 0; k < horizon; ++k) {
    const auto i = static_cast<std::size_t>(k);
    auto& m = report.steps[i];
    m.step = k + 1;
    m.psnr /= n;
    m.ssim /= n;
    m.ms_ssim /= n;
    m.disoccluded /= n;
    m.miou = confusion[i].miou();
    m.epe = epe[i].mean();
    m.boundary_epe = band[i].mean();
  }
  return report;
}

}  // namespace sadm::harness
