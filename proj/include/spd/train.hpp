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

#ifndef SPD_TRAIN_HPP
#define SPD_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spd/metrics.hpp"
#include "spd/model.hpp"
#include "spd/synth.hpp"

namespace spd {

struct TrainConfig {
  ArchKind arch = ArchKind::ours;
  BandSubset bands = BandSubset::all;
  Index patch_size = 64;
  Index batch_size = 8;
  long steps = 1000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  /// Write `checkpoint_path` every this many steps (0 disables).
  long checkpoint_every = 0;
  std::filesystem::path checkpoint_path;
  double eval_split_fraction = 0.15;
  Index stem_width = 256;
  Index bottleneck_width = 64;
  int block_count = 6;

  void validate() const;
  ModelSpec model_spec(Index input_channels) const;
};

/// One labelled scene held in memory: all bands plus its target.
struct SceneData {
  RasterGrid image;
  Raster<double> density;
  Mask mask;
};

using Dataset = std::vector<SceneData>;

SceneData to_scene_data(const SyntheticScene& scene);

struct DatasetSplit {
  Dataset train, val, test;
};

/// Scene-level shuffle-and-split; val and test each get `eval_fraction` of
/// the scenes (at least one each when there are three or more scenes).
DatasetSplit split_dataset(const Dataset& scenes, double eval_fraction, std::uint64_t seed);

/// Adam with bias correction. Moments are keyed by parameter name.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(double lr, double beta1, double beta2, double epsilon)
      : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void step(Model<float>& model);

  long iterations() const { return t_; }
  void set_iterations(long t) { t_ = t; }
  std::map<std::string, Eigen::ArrayXf>& first_moments() { return m_; }
  std::map<std::string, Eigen::ArrayXf>& second_moments() { return v_; }
  const std::map<std::string, Eigen::ArrayXf>& first_moments() const { return m_; }
  const std::map<std::string, Eigen::ArrayXf>& second_moments() const { return v_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, epsilon_ = 1e-8;
  long t_ = 0;
  std::map<std::string, Eigen::ArrayXf> m_, v_;
};

struct PatchOrigin {
  std::size_t scene = 0;
  Index row = 0;
  Index col = 0;
};

/// Uniform random patch origins over all valid positions of all scenes.
class PatchSampler {
 public:
  PatchSampler(std::vector<std::pair<Index, Index>> scene_sizes, Index patch_size);
  PatchOrigin sample(std::mt19937_64& rng) const;

 private:
  std::vector<std::pair<Index, Index>> sizes_;
  Index patch_;
};

/// Everything needed to predict with, or resume training of, a model.
struct Checkpoint {
  Model<float> model;
  BandSubset subset = BandSubset::all;
  std::vector<std::string> band_names;
  Eigen::ArrayXf input_mean;
  Eigen::ArrayXf input_std;
  AdamOptimizer optimizer;
  long step = 0;
  std::string rng_state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossBreakdown> trace;
};

/// Runs optimizer steps until `config.steps` total steps have been taken.
/// Passing `resume` continues from a saved checkpoint.
TrainResult train(const TrainConfig& config, const Dataset& scenes,
                  std::optional<Checkpoint> resume = std::nullopt);

struct PredictOptions {
  Index tile = 128;
  Index overlap = 16;
  /// Tile even when the image fits in one tile.
  bool force_tiling = false;
  /// Never tile.
  bool whole_image = false;
};

struct Prediction {
  Raster<double> density;
  Mask mask;
};

Prediction predict(const Checkpoint& checkpoint, const RasterGrid& image, const PredictOptions& options = {});

using Predictor = std::function<Prediction(const SceneData&)>;

/// Metrics over the concatenated pixels of all scenes.
MetricsReport evaluate(const Predictor& predictor, const Dataset& scenes);
MetricsReport evaluate(const Checkpoint& checkpoint, const Dataset& scenes);

struct AblationRow {
  BandSubset subset;
  Index channels = 0;
  MetricsReport report;
};

/// Trains and evaluates one model per band subset with otherwise identical
/// configuration.
std::vector<AblationRow> ablate_bands(const TrainConfig& base, const Dataset& train_scenes,
                                      const Dataset& test_scenes,
                                      const std::vector<BandSubset>& subsets = {BandSubset::all, BandSubset::rgb,
                                                                                BandSubset::rgbi,
                                                                                BandSubset::no_rgb});

std::string format_ablation_table(const std::vector<AblationRow>& rows);

/// Worker count from SPDX_THREADS (>= 1), also applied to Eigen.
int configure_threads();

}  // namespace spd

#endif  // SPD_TRAIN_HPP
