// Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any fails.
// Usage: acceptance [criterion ...]   (all seven when none are given)

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "../support/param_gradcheck.hpp"
#include "../support/random.hpp"
#include "../support/scenes.hpp"
#include "../support/tiny.hpp"
#include "sadm/core/ops.hpp"
#include "sadm/dynamics/losses.hpp"
#include "sadm/harness/experiment.hpp"
#include "sadm/harness/pipeline.hpp"
#include "sadm/inpaint/model.hpp"
#include "sadm/nn/checkpoint.hpp"
#include "sadm/synthworld/dataset.hpp"
#include "sadm/warp/warp.hpp"

using namespace sadm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------- 1

Outcome exactness() {
  std::mt19937_64 rng(101);
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };

  dynamics::DynamicsConfig cfg;
  cfg.hidden = 4;
  cfg.context_width = 4;
  cfg.fusion_width = 4;
  const dynamics::DynamicsModel model(cfg, 1);
  dynamics::DynamicsPass pass(model, false);

  // fused flow against a loop
  const Tensor probs = pass.fuse_masks(nn::Var::constant(testing::random_tensor(rng, {3, 16, 16}, -3.0, 3.0))).value();
  const Tensor flows = testing::random_tensor(rng, {6, 16, 16}, -4.0, 4.0);
  const Tensor fused = pass.fuse_flows(nn::Var::constant(probs), nn::Var::constant(flows)).value();
  double fuse_err = 0.0, simplex_err = 0.0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += probs.at(c, y, x);
      simplex_err = std::max(simplex_err, std::abs(s - 1.0));
      for (int d = 0; d < 2; ++d) {
        double f = 0.0;
        for (int c = 0; c < 3; ++c) f += probs.at(c, y, x) * flows.at(2 * c + d, y, x);
        fuse_err = std::max(fuse_err, std::abs(f - fused.at(d, y, x)));
      }
    }
  expect(fuse_err <= 1e-6, "fuse_flows");
  expect(simplex_err <= 1e-6, "simplex");

  // zero-flow warp
  const core::Frame frame(testing::random_tensor(rng, {3, 16, 16}, 0.0, 1.0));
  const core::Frame same = warp::warp_frame(frame, core::FlowField(16, 16));
  double warp_err = 0.0;
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) warp_err = std::max(warp_err, std::abs(frame.pixels[i] - same.pixels[i]));
  expect(warp_err <= 1e-6, "warp identity");

  // partial conv with full validity
  const nn::Var px = nn::Var::constant(testing::random_tensor(rng, {4, 12, 12}));
  const nn::Var pw = nn::Var::constant(testing::random_tensor(rng, {5, 4, 3, 3}));
  const nn::Var pb = nn::Var::constant(testing::random_tensor(rng, {5}));
  double pconv_err = 0.0;
  for (nn::ConvSpec spec : {nn::ConvSpec{1, 1}, nn::ConvSpec{2, 1}}) {
    const auto r = inpaint::partial_conv(px, Tensor({1, 12, 12}, 1.0), pw, pb, spec);
    const Tensor ref = nn::conv2d(px, pw, pb, spec).value();
    for (std::size_t i = 0; i < ref.size(); ++i) pconv_err = std::max(pconv_err, std::abs(ref[i] - r.features.value()[i]));
  }
  expect(pconv_err <= 1e-6, "partial conv");

  // KL closed form against Monte-Carlo
  const Tensor u({4}, std::vector<double>{0.3, -0.6, 0.1, 1.2});
  const Tensor v({4}, std::vector<double>{0.5, 1.4, 0.8, 0.3});
  const double closed = dynamics::loss_kl({nn::Var::constant(u), nn::Var::constant(v)}).item();
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 400000;
  double mc = 0.0;
  for (int s = 0; s < n; ++s)
    for (std::size_t i = 0; i < 4; ++i) {
      const double x = u[i] + std::sqrt(v[i]) * normal(rng);
      mc += -0.5 * std::log(v[i]) - 0.5 * (x - u[i]) * (x - u[i]) / v[i] + 0.5 * x * x;
    }
  mc /= n;
  const double kl_err = std::abs(mc - closed);
  expect(kl_err <= 1e-2, "KL");

  // flow loss, boundary-weighted cross-entropy, reconstruction term
  std::vector<nn::Var> pf, pm, pimg;
  std::vector<core::FlowField> tf;
  std::vector<core::SemanticMap> tm;
  std::vector<core::BoundaryWeightMap> tw;
  std::vector<inpaint::InpaintInput> ins;
  double flow_ref = 0.0, ce_ref = 0.0, rec_ref = 0.0;
  for (int k = 0; k < 3; ++k) {
    const auto a = testing::random_flow(rng, 10, 12), b = testing::random_flow(rng, 10, 12);
    for (std::size_t i = 0; i < a.vectors.size(); ++i) flow_ref += std::abs(a.vectors[i] - b.vectors[i]);
    pf.push_back(nn::Var::constant(a.vectors));
    tf.push_back(b);

    const auto m = testing::random_map(rng, 10, 12, 3);
    const auto w = core::boundary_weights(m, 5.0, 9.0);
    Tensor p = testing::random_tensor(rng, {3, 10, 12}, 0.01, 1.0);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 12; ++x) {
        const double s = p.at(0, y, x) + p.at(1, y, x) + p.at(2, y, x);
        for (int c = 0; c < 3; ++c) p.at(c, y, x) /= s;
        ce_ref += -w.weights.at(y, x) * std::log(std::max(p.at(m(y, x), y, x), 1e-8));
      }
    pm.push_back(nn::Var::constant(p));
    tm.push_back(m);
    tw.push_back(w);

    inpaint::InpaintInput in{testing::random_tensor(rng, {3, 10, 12}, 0.0, 1.0), Tensor({1, 10, 12}), Tensor({3, 10, 12})};
    for (double& mv : in.mask.storage()) mv = normal(rng) > 0.5 ? 1.0 : 0.0;
    const Tensor out = testing::random_tensor(rng, {3, 10, 12}, 0.0, 1.0);
    double r = 0.0;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 12; ++x) r += (1.0 - in.mask.at(0, y, x)) * std::abs(out.at(c, y, x) - in.anchor.at(c, y, x));
    rec_ref += r / 360.0;
    pimg.push_back(nn::Var::constant(out));
    ins.push_back(in);
  }
  const double flow_err = std::abs(dynamics::loss_flow(pf, tf).item() - flow_ref);
  const double ce_err = std::abs(dynamics::loss_semantic(pm, tm, tw, 1e-8).item() - ce_ref);
  const double rec_err = std::abs(inpaint::reconstruction_loss(pimg, ins).item() - rec_ref);
  expect(flow_err <= 1e-5, "flow loss");
  expect(ce_err <= 1e-5, "cross-entropy");
  expect(rec_err <= 1e-5, "reconstruction");

  std::string detail = "fuse " + fmt(fuse_err, 2) + ", simplex " + fmt(simplex_err, 2) + ", warp " + fmt(warp_err, 2) +
                       ", pconv " + fmt(pconv_err, 2) + ", KL " + fmt(kl_err, 2) + ", L_flow " + fmt(flow_err, 2) +
                       ", L_sem " + fmt(ce_err, 2) + ", L_rec " + fmt(rec_err, 2);
  for (const auto& f : failed) detail += " [failed: " + f + "]";
  return {failed.empty(), detail};
}

// ---------------------------------------------------------------- 2

Outcome gradient_check() {
  dynamics::DynamicsModel model(testing::tiny_config(true), 5);
  const core::Clip clip = testing::tiny_clip(6);
  const auto report = testing::check_param_gradients(
      model.params(),
      [&](nn::Binding& bind) {
        dynamics::DynamicsPass pass(model.config(), bind);
        std::mt19937_64 noise(27);
        return dynamics::clip_loss(pass, clip, dynamics::Mode::kStochastic, noise).total;
      },
      40, 11);
  return {report.pass_rate() >= 0.99, std::to_string(report.passed) + "/" + std::to_string(report.checked) +
                                           " within 1e-3 (" + fmt(100.0 * report.pass_rate(), 4) + "%), worst " +
                                           fmt(report.worst, 3) + " at " + report.worst_name};
}

// ---------------------------------------------------------------- 3

Outcome disocclusion() {
  const auto s = testing::missed_pixel_scene();
  const auto occ = warp::detect_occupancy(s.flow, &s.next_map, &s.prev_map).mask;
  const auto sem = warp::detect_semantic(s.next_map, s.prev_map, s.flow);
  const bool scene_ok = !occ(s.ay, s.ax) && sem(s.ay, s.ax);

  const auto clips = synthworld::make_clips(synthworld::default_world_spec(), 100, synthworld::kTestStream);
  warp::DetectionScore score;
  for (const auto& oc : clips)
    for (int t = 1; t < oc.clip.length(); ++t) {
      const auto i = static_cast<std::size_t>(t);
      score += warp::score_detection(warp::detect_disocclusion(oc.clip.maps[i], oc.clip.maps[i - 1], oc.clip.flows[i]),
                                     oc.disocclusion[i]);
    }
  const double f1 = score.f1();
  return {scene_ok && f1 >= 0.90, std::string("pixel A: occupancy ") + (occ(s.ay, s.ax) ? "flags" : "misses") + ", semantic " +
                                      (sem(s.ay, s.ax) ? "flags" : "misses") + "; combined F1 on 100 clips " + fmt(f1, 5) +
                                      " (P " + fmt(score.precision(), 4) + ", R " + fmt(score.recall(), 4) + ")"};
}

// ---------------------------------------------------------------- shared experiment

harness::ExperimentConfig e2e_config() {
  harness::ExperimentConfig cfg = harness::default_experiment();
  // Sized so both models train inside the time budget on one core.
  cfg.dynamics.hidden = 8;
  cfg.dynamics.downsample = 2;
  cfg.train.epochs = 10;
  cfg.train_clips = 500;
  cfg.test_clips = 100;
  cfg.train.seed = 2024;
  cfg.world.seed = 2024;
  cfg.train_inpaint.seed = 2024;
  cfg.sync();
  return cfg;
}

struct Shared {
  harness::ExperimentConfig cfg = e2e_config();
  std::vector<synthworld::OracleClip> test;
  std::optional<harness::DynamicsTrainState> sadm;
  std::optional<harness::SingleClassReport> comparison;
  double train_seconds = 0.0;
};

void train_e2e(Shared& s, bool with_baseline) {
  if (s.sadm && (!with_baseline || s.comparison)) return;
  const auto t0 = Clock::now();
  const auto train = harness::plain_clips(harness::make_split(s.cfg, "train"));
  s.test = harness::make_split(s.cfg, "test");
  const auto test = harness::plain_clips(s.test);
  auto log = [t0](const std::string& label, const harness::EpochLog& e) {
    std::cout << "  " << label << " epoch " << e.epoch << " loss " << fmt(e.loss, 6) << " (" << fmt(seconds_since(t0), 4) << " s)"
              << std::endl;
  };
  harness::TrainHooks hooks;
  hooks.on_epoch = [&](const harness::EpochLog& e) { log("semantic-aware", e); };
  s.sadm = harness::fit_dynamics(s.cfg.dynamics, s.cfg.train, train, hooks);
  if (with_baseline) {
    harness::SingleClassReport r;
    r.semantic_aware = {"semantic-aware", s.sadm->model.params().count(), s.cfg.dynamics.hidden,
                        harness::evaluate(s.sadm->model, nullptr, test)};
    const auto base_cfg = harness::matched_baseline(s.cfg.dynamics);
    harness::TrainHooks bh;
    bh.on_epoch = [&](const harness::EpochLog& e) { log("single-class", e); };
    const auto base = harness::fit_dynamics(base_cfg, s.cfg.train, train, bh);
    r.single_class = {"single-class", base.model.params().count(), base_cfg.hidden, harness::evaluate(base.model, nullptr, test)};
    s.comparison = r;
  }
  s.train_seconds = seconds_since(t0);
}

// ---------------------------------------------------------------- 4

Outcome end_to_end(Shared& s) {
  train_e2e(s, true);
  const auto& r = *s.comparison;
  std::cout << harness::format_table(r.semantic_aware.report) << harness::format_table(r.single_class.report);
  std::ofstream("acceptance_e2e.json") << harness::to_json(r).dump(2) << '\n';
  const auto& a = r.semantic_aware.report.steps.back();
  const auto& b = r.single_class.report.steps.back();
  const double miou_gain = 100.0 * (a.miou - b.miou);
  // boundary band pooled over the horizon
  double sa = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < r.semantic_aware.report.steps.size(); ++k) {
    sa += r.semantic_aware.report.steps[k].boundary_epe;
    sb += r.single_class.report.steps[k].boundary_epe;
  }
  const double epe_cut = 1.0 - sa / sb;
  const bool ok = miou_gain >= 5.0 && epe_cut >= 0.20 && s.train_seconds <= 45 * 60;
  return {ok, "t+5 mIoU " + fmt(100 * a.miou, 4) + " vs " + fmt(100 * b.miou, 4) + " (+" + fmt(miou_gain, 3) +
                  " points); boundary-band EPE " + fmt(sa / static_cast<double>(r.semantic_aware.report.steps.size()), 4) + " vs " +
                  fmt(sb / static_cast<double>(r.single_class.report.steps.size()), 4) + " (" + fmt(100 * epe_cut, 3) +
                  "% lower); params " + std::to_string(r.semantic_aware.parameters) + " vs " +
                  std::to_string(r.single_class.parameters) + "; " + fmt(s.train_seconds / 60.0, 3) + " min"};
}

// ---------------------------------------------------------------- 5

Outcome class_swap(Shared& s) {
  train_e2e(s, false);
  const auto t0 = Clock::now();
  const auto report = harness::class_swap(s.sadm->model, s.test, 1, 2);
  std::ofstream("acceptance_swap.json") << harness::to_json(report).dump(2) << '\n';
  int evaluable = 0;
  for (const auto& c : report.clips)
    for (const auto& seg : c.segments) evaluable += seg.evaluable;
  const double rate = report.success_rate();
  return {rate >= 0.90, fmt(100 * rate, 4) + "% of " + std::to_string(report.clips.size()) + " clips (" +
                            std::to_string(evaluable) + " evaluable segments), " + fmt(seconds_since(t0), 3) + " s"};
}

// ---------------------------------------------------------------- 6 and 7

harness::TrainConfig stage2_train(const Shared& s) {
  harness::TrainConfig t = s.cfg.train_inpaint;
  t.epochs = 1;
  return t;
}

Outcome schedule_and_stages(Shared& s) {
  train_e2e(s, false);
  const harness::TrainConfig defaults;
  const bool lr_ok = defaults.lr_at(20) == 0.0008;

  const fs::path dir = fs::temp_directory_path() / "sadm_acceptance";
  fs::create_directories(dir);
  harness::save_dynamics(dir / "stage1.ckpt", *s.sadm, s.cfg.train);
  const auto stage1 = nn::load_archive(dir / "stage1.ckpt");

  const auto data = harness::plain_clips(synthworld::make_clips(s.cfg.world, 16, synthworld::kTrainStream));
  const auto frozen = harness::load_dynamics_model(dir / "stage1.ckpt");
  harness::InpaintTrainState st{inpaint::InpaintModel(s.cfg.inpaint, s.cfg.train_inpaint.seed), nn::Adam(), nn::Adam(), 0, {}};
  harness::InpaintTrainHooks hooks;
  hooks.checkpoint = dir / "stage2.ckpt";
  harness::train_inpaint(stage2_train(s), frozen, st, data, hooks);
  const auto stage2 = nn::load_archive(dir / "stage2.ckpt");

  std::size_t keys = 0, differ = 0;
  for (const auto& [name, t] : stage1.arrays) {
    if (name.rfind("dynamics.", 0) != 0) continue;
    ++keys;
    const auto it = stage2.arrays.find(name);
    if (it == stage2.arrays.end() || it->second.shape() != t.shape() || it->second.storage() != t.storage()) ++differ;
  }
  std::size_t inpaint_changed = 0;
  const inpaint::InpaintModel init(s.cfg.inpaint, s.cfg.train_inpaint.seed);
  for (const auto& [name, t] : init.params().entries())
    if (st.model.params().get(name).storage() != t.storage()) ++inpaint_changed;
  fs::remove_all(dir);
  const bool ok = lr_ok && keys > 0 && differ == 0 && inpaint_changed > 0;
  return {ok, "lr(20) = " + fmt(defaults.lr_at(20), 17) + "; stage 2 changed " + std::to_string(inpaint_changed) +
                  " inpainting tensors and " + std::to_string(differ) + "/" + std::to_string(keys) + " dynamics tensors"};
}

Outcome determinism(Shared& s) {
  train_e2e(s, false);
  const auto data = harness::plain_clips(synthworld::make_clips(s.cfg.world, 16, synthworld::kTrainStream));
  std::vector<core::Clip> test;
  for (std::size_t i = 0; i < 16 && i < s.test.size(); ++i) test.push_back(s.test[i].clip);
  auto run = [&] {
    harness::InpaintTrainState st{inpaint::InpaintModel(s.cfg.inpaint, s.cfg.train_inpaint.seed), nn::Adam(), nn::Adam(), 0, {}};
    harness::train_inpaint(stage2_train(s), s.sadm->model, st, data);
    harness::EvalOptions opts;
    opts.pipeline.mode = dynamics::Mode::kStochastic;
    opts.pipeline.seed = s.cfg.train.seed;
    return harness::to_json(harness::evaluate(s.sadm->model, &st.model, test, opts)).dump();
  };
  const std::string first = run();
  const std::string second = run();
  return {first == second, first == second ? "two stage-2 trainings + full-pipeline evaluations gave identical reports (" +
                                                 std::to_string(first.size()) + " bytes)"
                                           : "reports differ"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7};

  Shared shared;
  const std::vector<std::pair<int, std::string>> names{{1, "exactness suite"},
                                                       {2, "gradient check"},
                                                       {3, "dis-occlusion suite"},
                                                       {4, "end-to-end SADM vs single-class"},
                                                       {5, "class swap"},
                                                       {6, "lr schedule and two-stage contract"},
                                                       {7, "determinism"}};
  int failures = 0;
  std::vector<std::string> lines;
  for (const auto& [id, name] : names) {
    if (!wanted.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      switch (id) {
        case 1: o = exactness(); break;
        case 2: o = gradient_check(); break;
        case 3: o = disocclusion(); break;
        case 4: o = end_to_end(shared); break;
        case 5: o = class_swap(shared); break;
        case 6: o = schedule_and_stages(shared); break;
        case 7: o = determinism(shared); break;
      }
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const std::string line = std::string(o.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + " (" + name + "): " +
                             o.detail + " [" + fmt(seconds_since(t0), 4) + " s]";
    std::cout << line << std::endl;
    lines.push_back(line);
    failures += !o.pass;
  }
  std::cout << "\nsummary\n";
  for (const auto& l : lines) std::cout << l << '\n';
  return failures == 0 ? 0 : 1;
}
