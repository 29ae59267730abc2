// Command-line driver: data generation, both training stages, prediction, evaluation, ablations.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sadm/core/error.hpp"
#include "sadm/core/io.hpp"
#include "sadm/harness/experiment.hpp"
#include "sadm/harness/pipeline.hpp"
#include "sadm/harness/visualize.hpp"
#include "sadm/nn/checkpoint.hpp"
#include "sadm/synthworld/dataset.hpp"

namespace fs = std::filesystem;
using namespace sadm;
using namespace sadm::harness;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string checkpoint;
  std::string data;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "experiment JSON (defaults when omitted)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "overrides the world and training seeds");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--checkpoint", c.checkpoint, "checkpoint path");
  app->add_option("--data", c.data, "dataset root written by generate-data (generated in memory when omitted)");
}

ExperimentConfig experiment(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? default_experiment() : load_experiment(c.config);
  if (c.seed) apply_seed(cfg, *c.seed);
  cfg.sync();
  cfg.validate();
  return cfg;
}

std::vector<core::Clip> clips(const Common& c, const ExperimentConfig& cfg, const std::string& split) {
  if (!c.data.empty()) {
    auto out = synthworld::read_split(c.data, split);
    if (out.empty()) throw ConfigError("no '" + split + "' clips in " + c.data);
    return out;
  }
  return plain_clips(make_split(cfg, split));
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path checkpoint_or(const Common& c, const char* fallback) {
  return c.checkpoint.empty() ? fs::path(c.out) / fallback : fs::path(c.checkpoint);
}

fs::path require_checkpoint(const Common& c) {
  if (c.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (!fs::exists(c.checkpoint)) throw ConfigError("checkpoint " + c.checkpoint + " does not exist");
  return c.checkpoint;
}

std::string stage_of(const fs::path& path) { return nn::load_archive(path).metadata.value("stage", ""); }

void print_epoch(const std::string& label, const EpochLog& e) {
  std::cout << label << " epoch " << e.epoch << " lr " << e.lr << " loss " << e.loss << " flow " << e.flow << " semantic "
            << e.semantic << " kl " << e.kl << std::endl;
}

int generate_data(const Common& c) {
  const auto cfg = experiment(c);
  const fs::path root(c.out);
  fs::create_directories(root);
  fs::remove(root / "manifest.jsonl");
  for (const char* split : {"train", "test"}) {
    const auto data = make_split(cfg, split);
    synthworld::write_split(root, split, cfg.world, data);
    std::cout << split << ": " << data.size() << " clips" << std::endl;
  }
  write_json(root / "world.json", synthworld::to_json(cfg.world));
  return 0;
}

int train_dynamics_cmd(const Common& c, bool resume) {
  const auto cfg = experiment(c);
  const auto data = clips(c, cfg, "train");
  const fs::path ckpt = checkpoint_or(c, "dynamics.ckpt");
  fs::create_directories(ckpt.parent_path().empty() ? fs::path(".") : ckpt.parent_path());
  DynamicsTrainState state = resume ? load_dynamics(ckpt) : DynamicsTrainState{dynamics::DynamicsModel(cfg.dynamics, cfg.train.seed), nn::Adam(), 0, {}};
  std::cout << "parameters " << state.model.params().count() << ", " << data.size() << " clips" << std::endl;
  TrainHooks hooks;
  hooks.checkpoint = ckpt;
  hooks.on_epoch = [](const EpochLog& e) { print_epoch("dynamics", e); };
  train_dynamics(cfg.train, state, data, hooks);
  std::cout << "wrote " << ckpt.string() << std::endl;
  return 0;
}

int train_inpaint_cmd(const Common& c, const std::string& out_ckpt) {
  const auto cfg = experiment(c);
  const fs::path stage1 = require_checkpoint(c);
  const auto dyn = load_dynamics_model(stage1);
  const auto data = clips(c, cfg, "train");
  const fs::path ckpt = out_ckpt.empty() ? fs::path(c.out) / "inpaint.ckpt" : fs::path(out_ckpt);
  fs::create_directories(ckpt.parent_path().empty() ? fs::path(".") : ckpt.parent_path());
  InpaintTrainState state{inpaint::InpaintModel(cfg.inpaint, cfg.train_inpaint.seed), nn::Adam(), nn::Adam(), 0, {}};
  InpaintTrainHooks hooks;
  hooks.checkpoint = ckpt;
  hooks.on_epoch = [](const InpaintEpochLog& e) {
    std::cout << "inpaint epoch " << e.epoch << " lr " << e.lr << " generator " << e.generator << " reconstruction "
              << e.reconstruction << " discriminator " << e.discriminator << std::endl;
  };
  train_inpaint(cfg.train_inpaint, dyn, state, data, hooks);
  std::cout << "wrote " << ckpt.string() << std::endl;
  return 0;
}

struct Models {
  dynamics::DynamicsModel dynamics;
  std::optional<inpaint::InpaintModel> inpaint;
};

Models load_models(const fs::path& path, bool use_inpaint) {
  Models m{load_dynamics_model(path), std::nullopt};
  if (use_inpaint && stage_of(path) == "inpaint") m.inpaint.emplace(load_inpaint(path).model);
  return m;
}

PipelineOptions pipeline_options(const ExperimentConfig& cfg) {
  PipelineOptions o;
  o.mode = cfg.stochastic_eval ? dynamics::Mode::kStochastic : dynamics::Mode::kDeterministic;
  o.seed = cfg.train.seed;
  return o;
}

int predict_cmd(const Common& c, int index, bool use_inpaint) {
  const auto cfg = experiment(c);
  const auto models = load_models(require_checkpoint(c), use_inpaint);
  const auto test = clips(c, cfg, "test");
  if (index < 0 || index >= static_cast<int>(test.size())) throw ConfigError("--clip out of range");
  const core::Clip& clip = test[static_cast<std::size_t>(index)];
  const auto steps = run_pipeline(models.dynamics, models.inpaint ? &*models.inpaint : nullptr, clip,
                                  models.dynamics.config().horizon, pipeline_options(cfg));
  const fs::path out(c.out);
  fs::create_directories(out);
  std::vector<std::vector<Tensor>> rows(5);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& s = steps[k];
    const std::string tag = (k + 1 < 10 ? "0" : "") + std::to_string(k + 1);
    const auto& truth = clip.frames[static_cast<std::size_t>(clip.observed_len) + k];
    core::io::write_frame_png(out / ("frame_" + tag + ".png"), s.output);
    core::io::write_map_png(out / ("seg_" + tag + ".png"), s.map.argmax());
    core::io::write_flo(out / ("flow_" + tag + ".flo"), s.flow);
    core::io::write_mask_png(out / ("disocc_" + tag + ".png"), s.mask.as_bools(), s.mask.height(), s.mask.width());
    rows[0].push_back(truth.pixels);
    rows[1].push_back(overlay_mask(s.warped.pixels, s.mask));
    rows[2].push_back(s.output.pixels);
    rows[3].push_back(map_to_rgb(s.map.argmax()));
    rows[4].push_back(flow_to_rgb(s.flow, 4.0));
  }
  core::io::write_rgb_png(out / "grid.png", make_grid(rows));
  std::cout << "wrote " << steps.size() << " steps to " << out.string() << " (grid rows: truth, warped + dis-occlusion, output, map, flow)"
            << std::endl;
  return 0;
}

int evaluate_cmd(const Common& c, bool use_inpaint) {
  const auto cfg = experiment(c);
  const auto models = load_models(require_checkpoint(c), use_inpaint);
  const auto test = clips(c, cfg, "test");
  EvalOptions opts;
  opts.pipeline = pipeline_options(cfg);
  const EvalReport report = evaluate(models.dynamics, models.inpaint ? &*models.inpaint : nullptr, test, opts);
  const fs::path out(c.out);
  write_json(out / "eval.json", to_json(report));
  std::ofstream(out / "eval.txt") << format_table(report);
  std::cout << format_table(report);
  return 0;
}

int ablate_single_class_cmd(const Common& c) {
  const auto cfg = experiment(c);
  const auto r = ablate_single_class(cfg, clips(c, cfg, "train"), clips(c, cfg, "test"), print_epoch);
  write_json(fs::path(c.out) / "single_class.json", to_json(r));
  std::cout << "semantic-aware: " << r.semantic_aware.parameters << " parameters\n"
            << format_table(r.semantic_aware.report) << "single-class: " << r.single_class.parameters << " parameters\n"
            << format_table(r.single_class.report);
  return 0;
}

int ablate_swap_cmd(const Common& c, const std::string& classes) {
  const auto cfg = experiment(c);
  const auto model = load_dynamics_model(require_checkpoint(c));
  const auto pair = parse_merge_map(classes);
  if (pair.size() != 2) throw ConfigError("--classes takes two class ids, e.g. 2,3");
  const auto report = class_swap(model, make_split(cfg, "test"), pair[0], pair[1]);
  write_json(fs::path(c.out) / "swap.json", to_json(report));
  std::cout << "swap " << pair[0] + 1 << " <-> " << pair[1] + 1 << ": " << report.success_rate() * 100.0
            << "% of clips follow the swapped laws" << std::endl;
  return 0;
}

int ablate_class_count_cmd(const Common& c, const std::string& merge_text) {
  const auto cfg = experiment(c);
  const auto merge = parse_merge_map(merge_text);
  const auto r = ablate_class_count(cfg, merge, clips(c, cfg, "train"), clips(c, cfg, "test"), print_epoch);
  write_json(fs::path(c.out) / "class_count.json", to_json(r));
  std::cout << r.original.label << "\n" << format_table(r.original.report) << r.merged.label << "\n" << format_table(r.merged.report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-aware dynamics model: video prediction on a synthetic world"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("generate-data", "write train/test clips and a manifest");
  add_common(gen, common);

  bool resume = false;
  auto* td = app.add_subcommand("train-dynamics", "stage 1: train the dynamics model");
  add_common(td, common);
  td->add_flag("--resume", resume, "continue from --checkpoint");

  std::string inpaint_out;
  auto* ti = app.add_subcommand("train-inpaint", "stage 2: train the inpainter on a frozen stage-1 checkpoint");
  add_common(ti, common);
  ti->add_option("--save", inpaint_out, "stage-2 checkpoint path (default <out>/inpaint.ckpt)");

  int clip_index = 0;
  bool no_inpaint = false;
  auto* pr = app.add_subcommand("predict", "predict one test clip and write frames, maps, flows and a grid");
  add_common(pr, common);
  pr->add_option("--clip", clip_index, "test clip index");
  pr->add_flag("--no-inpaint", no_inpaint, "skip inpainting even with a stage-2 checkpoint");

  auto* ev = app.add_subcommand("evaluate", "score the full pipeline on the test split");
  add_common(ev, common);
  ev->add_flag("--no-inpaint", no_inpaint, "skip inpainting even with a stage-2 checkpoint");

  auto* ab = app.add_subcommand("ablate", "ablation experiments");
  ab->require_subcommand(1);
  auto* sc = ab->add_subcommand("single-class", "semantic-aware vs. matched single-class baseline");
  add_common(sc, common);
  std::string swap_classes = "2,3";
  auto* sw = ab->add_subcommand("swap", "exchange two classes' inputs in a trained model");
  add_common(sw, common);
  sw->add_option("--classes", swap_classes, "two 1-based class ids");
  std::string merge;
  auto* cc = ab->add_subcommand("class-count", "retrain with merged classes");
  add_common(cc, common);
  cc->add_option("--merge", merge, "new 1-based id per original class, e.g. 1,2,2")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return generate_data(common);
    if (td->parsed()) return train_dynamics_cmd(common, resume);
    if (ti->parsed()) return train_inpaint_cmd(common, inpaint_out);
    if (pr->parsed()) return predict_cmd(common, clip_index, !no_inpaint);
    if (ev->parsed()) return evaluate_cmd(common, !no_inpaint);
    if (sc->parsed()) return ablate_single_class_cmd(common);
    if (sw->parsed()) return ablate_swap_cmd(common, swap_classes);
    if (cc->parsed()) return ablate_class_count_cmd(common, merge);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
