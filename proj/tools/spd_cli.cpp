// Copyright 2026 The spdensity Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: synth, gt, train, predict, eval, ablate.
//
// Exit codes: 0 success, 2 invalid input (bad flags, config or data),
// 1 any other failure. Every flag can also be given in a TOML/INI file passed
// with --config, using one section per subcommand, e.g. [train].

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spd/gt.hpp"
#include "spd/io.hpp"
#include "spd/metrics.hpp"
#include "spd/synth.hpp"
#include "spd/train.hpp"

namespace fs = std::filesystem;

namespace spd {
namespace {

constexpr int kExitInvalid = 2;

const std::vector<std::string> kPresets{"coconut", "confusable", "cars", "high_frequency"};
const std::vector<std::string> kArchs{"ours", "ours_atrous", "strided_baseline"};
const std::vector<std::string> kSubsets{"all", "rgb", "rgbi", "no_rgb"};
const std::vector<std::string> kSplits{"train", "val", "test", "all"};

// File names inside a scene directory.
constexpr const char* kImageFile = "image.spdr";
constexpr const char* kDensityFile = "density.spdr";
constexpr const char* kMaskFile = "mask.spdr";
constexpr const char* kAnnotationFile = "annotations.txt";

// ----------------------------------------------------------- datasets

struct DatasetOptions {
  std::vector<std::string> scene_dirs;
  std::string preset = "coconut";
  int scene_count = 20;
  Index scene_size = 128;
  double eval_fraction = 0.15;
  std::string split;

  void add(CLI::App* app, const std::string& default_split) {
    split = default_split;
    app->add_option("--scene-dir", scene_dirs, "Scene directory written by `synth` (repeatable)")
        ->check(CLI::ExistingDirectory);
    app->add_option("--preset", preset, "Generate scenes from this preset when no --scene-dir is given")
        ->check(CLI::IsMember(kPresets))
        ->capture_default_str();
    app->add_option("--scenes", scene_count, "Number of generated scenes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--scene-size", scene_size, "Side of generated scenes in pixels")
        ->check(CLI::Range(8, 4096))
        ->capture_default_str();
    app->add_option("--eval-fraction", eval_fraction, "Fraction of scenes held out for val and for test")
        ->check(CLI::Range(0.0, 0.49))
        ->capture_default_str();
    app->add_option("--split", split, "Scene split to use")->check(CLI::IsMember(kSplits))->capture_default_str();
  }
};

SceneData load_scene_dir(const fs::path& dir) {
  SceneData s;
  s.image = read_raster(dir / kImageFile);
  s.image.require_uniform();
  if (fs::exists(dir / kDensityFile)) {
    s.density = grid_to_density(read_raster(dir / kDensityFile));
    s.mask = fs::exists(dir / kMaskFile) ? grid_to_mask(read_raster(dir / kMaskFile))
                                         : derive_semantic_mask(s.density);
  } else if (fs::exists(dir / kAnnotationFile)) {
    const auto target = build_target(read_annotations(dir / kAnnotationFile), kDefaultDownscale);
    s.density = target.density;
    s.mask = target.mask;
  } else {
    throw ValidationError("scene directory " + dir.string() + " has neither " + kDensityFile + " nor " +
                          kAnnotationFile);
  }
  if (s.density.rows() != s.image.height() || s.density.cols() != s.image.width()) {
    throw ValidationError("scene directory " + dir.string() + ": target and image sizes differ");
  }
  return s;
}

Dataset load_dataset(const DatasetOptions& opt, std::uint64_t seed) {
  Dataset scenes;
  if (!opt.scene_dirs.empty()) {
    for (const auto& d : opt.scene_dirs) scenes.push_back(load_scene_dir(d));
  } else {
    for (int i = 0; i < opt.scene_count; ++i) {
      SceneConfig c = scene_preset(opt.preset);
      c.scene_h = c.scene_w = opt.scene_size;
      c.seed = 1000 * seed + static_cast<std::uint64_t>(i);
      scenes.push_back(to_scene_data(generate_scene(c)));
    }
  }
  return scenes;
}

Dataset pick_split(const Dataset& scenes, const DatasetOptions& opt, std::uint64_t seed) {
  if (opt.split == "all") return scenes;
  DatasetSplit split = split_dataset(scenes, opt.eval_fraction, seed);
  Dataset& out = opt.split == "train" ? split.train : opt.split == "val" ? split.val : split.test;
  if (out.empty()) {
    throw ValidationError("split '" + opt.split + "' is empty for " + std::to_string(scenes.size()) +
                          " scenes; add scenes, raise --eval-fraction or use --split all");
  }
  return out;
}

// ------------------------------------------------------ train options

struct TrainOptions {
  std::string arch = "ours";
  std::string bands = "all";
  TrainConfig config;

  void add(CLI::App* app, const std::string& default_arch) {
    arch = default_arch;
    app->add_option("--arch", arch, "Network variant")->check(CLI::IsMember(kArchs))->capture_default_str();
    app->add_option("--bands", bands, "Input band subset")->check(CLI::IsMember(kSubsets))->capture_default_str();
    app->add_option("--patch", config.patch_size, "Training patch side")->capture_default_str();
    app->add_option("--batch", config.batch_size, "Patches per step")->capture_default_str();
    app->add_option("--steps", config.steps, "Total optimizer steps")->capture_default_str();
    app->add_option("--lr", config.learning_rate, "Adam learning rate")->capture_default_str();
    app->add_option("--beta1", config.beta1, "Adam beta1")->capture_default_str();
    app->add_option("--beta2", config.beta2, "Adam beta2")->capture_default_str();
    app->add_option("--adam-eps", config.adam_epsilon, "Adam epsilon")->capture_default_str();
    app->add_option("--stem-width", config.stem_width, "Stem and block output width")->capture_default_str();
    app->add_option("--bottleneck-width", config.bottleneck_width, "Bottleneck width")->capture_default_str();
    app->add_option("--blocks", config.block_count, "Residual block count")->capture_default_str();
  }

  TrainConfig resolve(std::uint64_t seed, double eval_fraction) const {
    TrainConfig c = config;
    c.arch = parse_arch_kind(arch);
    c.bands = parse_band_subset(bands);
    c.seed = seed;
    c.eval_split_fraction = eval_fraction;
    c.validate();
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------- commands

struct SynthOptions {
  std::string preset = "coconut";
  std::string out_dir;
  std::optional<Index> height, width;
  std::optional<double> density, area_ratio, noise;
  std::optional<std::string> placement;
};

void run_synth(const SynthOptions& o, std::uint64_t seed) {
  SceneConfig c = scene_preset(o.preset);
  c.seed = seed;
  if (o.height) c.scene_h = *o.height;
  if (o.width) c.scene_w = *o.width;
  if (o.density) c.object_density = *o.density;
  if (o.area_ratio) c.object_area_ratio = *o.area_ratio;
  if (o.noise) c.noise_sigma = *o.noise;
  if (o.placement) c.placement = *o.placement == "poisson" ? Placement::poisson : Placement::grid;
  const SyntheticScene scene = generate_scene(c);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_raster(dir / kImageFile, scene.image);
  write_annotations(dir / kAnnotationFile, scene.annotations);
  write_raster(dir / kDensityFile, density_grid(scene.target.density, c.target_gsd_m));
  write_raster(dir / kMaskFile, mask_grid(scene.target.mask, c.target_gsd_m));
  std::cout << "wrote " << dir.string() << ": " << scene.image.band_count() << " bands " << c.scene_h << "x"
            << c.scene_w << ", " << scene.annotations.points.size() << " objects\n";
}

struct GtOptions {
  std::string annotations;
  Index k = kDefaultDownscale;
  double gsd = 10.0;
  std::string out_dir;
};

void run_gt(const GtOptions& o) {
  const auto target = build_target(read_annotations(o.annotations), o.k);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_raster(dir / kDensityFile, density_grid(target.density, o.gsd));
  write_raster(dir / kMaskFile, mask_grid(target.mask, o.gsd));
  std::cout << "wrote " << dir.string() << ": " << target.density.rows() << "x" << target.density.cols()
            << ", sigma " << target.sigma << ", total " << target.density.sum() << "\n";
}

struct TrainCommand {
  TrainOptions train;
  DatasetOptions data;
  std::string checkpoint;
  std::string resume;
  std::string trace;
  long checkpoint_every = 0;
};

void run_train(const TrainCommand& o, std::uint64_t seed) {
  TrainConfig cfg = o.train.resolve(seed, o.data.eval_fraction);
  cfg.checkpoint_every = o.checkpoint_every;
  cfg.checkpoint_path = o.checkpoint;
  cfg.validate();
  const Dataset scenes = pick_split(load_dataset(o.data, seed), o.data, seed);
  std::optional<Checkpoint> resume;
  if (!o.resume.empty()) resume = load_checkpoint(o.resume);
  const TrainResult r = train(cfg, scenes, std::move(resume));
  save_checkpoint(o.checkpoint, r.checkpoint);
  if (!o.trace.empty()) {
    std::ofstream out(o.trace);
    if (!out) throw ValidationError("cannot write " + o.trace);
    out << "step,semantic,density,total\n" << std::setprecision(9);
    const long first = r.checkpoint.step - static_cast<long>(r.trace.size());
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      out << first + static_cast<long>(i) + 1 << "," << r.trace[i].semantic << "," << r.trace[i].density << ","
          << r.trace[i].total << "\n";
    }
  }
  std::cout << "trained " << to_string(cfg.arch) << " on " << scenes.size() << " scenes to step "
            << r.checkpoint.step;
  if (!r.trace.empty()) std::cout << ", final loss " << r.trace.back().total;
  std::cout << "; checkpoint " << o.checkpoint << "\n";
}

struct PredictCommand {
  std::string checkpoint;
  std::string image;
  std::string out_dir;
  PredictOptions options;
};

void run_predict(const PredictCommand& o) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const RasterGrid image = read_raster(o.image);
  image.require_uniform();
  const Prediction p = predict(ck, image, o.options);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  const double gsd = image.bands.front().gsd_m;
  write_raster(dir / kDensityFile, density_grid(p.density, gsd));
  write_raster(dir / kMaskFile, mask_grid(p.mask, gsd));
  std::cout << "wrote " << dir.string() << ": predicted count " << p.density.max(0.0).sum() << "\n";
}

struct EvalCommand {
  std::string checkpoint;
  DatasetOptions data;
  std::string format = "json";
  std::string out;
};

void run_eval(const EvalCommand& o, std::uint64_t seed) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const Dataset scenes = pick_split(load_dataset(o.data, seed), o.data, seed);
  const MetricsReport r = evaluate(ck, scenes);
  write_text(o.out, o.format == "json" ? r.to_json() + "\n" : r.to_key_value());
}

struct AblateCommand {
  TrainOptions train;
  DatasetOptions data;
  std::string json_out;
};

void run_ablate(const AblateCommand& o, std::uint64_t seed) {
  const TrainConfig cfg = o.train.resolve(seed, o.data.eval_fraction);
  const Dataset scenes = load_dataset(o.data, seed);
  const DatasetSplit split = split_dataset(scenes, o.data.eval_fraction, seed);
  if (split.test.empty()) throw ValidationError("ablate: no held-out scenes; add scenes or raise --eval-fraction");
  const auto rows = ablate_bands(cfg, split.train, split.test);
  std::cout << format_ablation_table(rows);
  if (!o.json_out.empty()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
      j.push_back({{"bands", to_string(r.subset)},
                   {"channels", r.channels},
                   {"report", nlohmann::json::parse(r.report.to_json())}});
    }
    write_text(o.json_out, j.dump(2) + "\n");
  }
}

}  // namespace
}  // namespace spd

int main(int argc, char** argv) {
  using namespace spd;
  CLI::App app{"Sub-pixel object density estimation: synthesis, training and evaluation"};
  app.set_config("--config", "", "TOML/INI file with one [section] per subcommand");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
  };

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic multispectral scene with annotations");
  synth_cmd->add_option("--preset", synth.preset, "Scene preset")
      ->check(CLI::IsMember(kPresets))
      ->capture_default_str();
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--height", synth.height, "Scene height in pixels");
  synth_cmd->add_option("--width", synth.width, "Scene width in pixels");
  synth_cmd->add_option("--density", synth.density, "Objects per pixel inside plantations");
  synth_cmd->add_option("--area-ratio", synth.area_ratio, "Object footprint over pixel area");
  synth_cmd->add_option("--noise", synth.noise, "Additive reflectance noise sigma");
  synth_cmd->add_option("--placement", synth.placement, "Object placement")
      ->check(CLI::IsMember({"grid", "poisson"}));
  add_seed(synth_cmd);

  GtOptions gt;
  auto* gt_cmd = app.add_subcommand("gt", "Build density and mask targets from point annotations");
  gt_cmd->add_option("--annotations", gt.annotations, "Annotation file")->required()->check(CLI::ExistingFile);
  gt_cmd->add_option("--k", gt.k, "Downscale factor")->capture_default_str();
  gt_cmd->add_option("--gsd", gt.gsd, "Ground sampling distance of the outputs (m)")->capture_default_str();
  gt_cmd->add_option("--out-dir", gt.out_dir, "Output directory")->required();
  add_seed(gt_cmd);

  TrainCommand train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train a density network");
  train_opts.train.add(train_cmd, "ours");
  train_opts.data.add(train_cmd, "train");
  train_cmd->add_option("--checkpoint", train_opts.checkpoint, "Checkpoint output path")->required();
  train_cmd->add_option("--resume", train_opts.resume, "Continue from this checkpoint")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--checkpoint-every", train_opts.checkpoint_every, "Save every N steps (0 = only at end)")
      ->capture_default_str();
  train_cmd->add_option("--trace", train_opts.trace, "Write the per-step loss trace as CSV");
  add_seed(train_cmd);

  PredictCommand predict_opts;
  auto* predict_cmd = app.add_subcommand("predict", "Predict density and mask rasters for an image");
  predict_cmd->add_option("--checkpoint", predict_opts.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--image", predict_opts.image, "Input raster")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out-dir", predict_opts.out_dir, "Output directory")->required();
  predict_cmd->add_option("--tile", predict_opts.options.tile, "Tile side")->capture_default_str();
  predict_cmd->add_option("--overlap", predict_opts.options.overlap, "Tile overlap")->capture_default_str();
  predict_cmd->add_flag("--whole-image", predict_opts.options.whole_image, "Never tile");
  add_seed(predict_cmd);

  EvalCommand eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on held-out scenes");
  eval_cmd->add_option("--checkpoint", eval_opts.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval_opts.data.add(eval_cmd, "test");
  eval_cmd->add_option("--format", eval_opts.format, "Report format")
      ->check(CLI::IsMember({"json", "kv"}))
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_opts.out, "Report path (default stdout)");
  add_seed(eval_cmd);

  AblateCommand ablate_opts;
  auto* ablate_cmd = app.add_subcommand("ablate", "Retrain on each band subset and compare");
  ablate_opts.train.add(ablate_cmd, "ours_atrous");
  ablate_opts.data.add(ablate_cmd, "test");
  ablate_cmd->add_option("--json", ablate_opts.json_out, "Also write the reports as JSON");
  add_seed(ablate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  configure_threads();
  try {
    if (*synth_cmd) run_synth(synth, seed);
    else if (*gt_cmd) run_gt(gt);
    else if (*train_cmd) run_train(train_opts, seed);
    else if (*predict_cmd) run_predict(predict_opts);
    else if (*eval_cmd) run_eval(eval_opts, seed);
    else if (*ablate_cmd) run_ablate(ablate_opts, seed);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
