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

#include "spd/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>

#include "spd/io.hpp"

namespace spd {

void TrainConfig::validate() const {
  if (patch_size < 5) throw ValidationError("train: patch size must be >= 5");
  if (batch_size < 1) throw ValidationError("train: batch size must be >= 1");
  if (steps < 0) throw ValidationError("train: steps must be >= 0");
  if (!(learning_rate > 0.0)) throw ValidationError("train: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("train: Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ValidationError("train: Adam epsilon must be positive");
  if (checkpoint_every < 0) throw ValidationError("train: checkpoint interval must be >= 0");
  if (checkpoint_every > 0 && checkpoint_path.empty()) {
    throw ValidationError("train: periodic checkpoints need a checkpoint path");
  }
  if (!(eval_split_fraction >= 0.0 && eval_split_fraction < 0.5)) {
    throw ValidationError("train: eval split fraction must lie in [0, 0.5)");
  }
}

ModelSpec TrainConfig::model_spec(Index input_channels) const {
  return ModelSpec{arch, input_channels, stem_width, bottleneck_width, block_count};
}

SceneData to_scene_data(const SyntheticScene& scene) {
  return SceneData{scene.image, scene.target.density, scene.target.mask};
}

DatasetSplit split_dataset(const Dataset& scenes, double eval_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(scenes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_eval = static_cast<std::size_t>(std::round(eval_fraction * static_cast<double>(scenes.size())));
  if (eval_fraction > 0.0 && scenes.size() >= 3) n_eval = std::max<std::size_t>(n_eval, 1);
  DatasetSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& s = scenes[order[i]];
    if (i < n_eval) {
      split.test.push_back(s);
    } else if (i < 2 * n_eval) {
      split.val.push_back(s);
    } else {
      split.train.push_back(s);
    }
  }
  return split;
}

void AdamOptimizer::step(Model<float>& model) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const auto step_size = static_cast<float>(lr_ / c1);
  const auto inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
  const auto eps = static_cast<float>(epsilon_);
  for (auto& p : model.parameters()) {
    const auto& g = p.tensor->grad();
    auto& m = m_[p.name];
    auto& v = v_[p.name];
    if (m.size() != g.size()) m = Eigen::ArrayXf::Zero(g.size());
    if (v.size() != g.size()) v = Eigen::ArrayXf::Zero(g.size());
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.square();
    p.tensor->data() -= step_size * m / (v.sqrt() * inv_sqrt_c2 + eps);
  }
}

PatchSampler::PatchSampler(std::vector<std::pair<Index, Index>> scene_sizes, Index patch_size)
    : sizes_(std::move(scene_sizes)), patch_(patch_size) {
  if (sizes_.empty()) throw ValidationError("patch sampler: no scenes");
  for (const auto& [h, w] : sizes_) {
    if (h < patch_ || w < patch_) {
      throw ValidationError("patch sampler: scene " + std::to_string(h) + "x" + std::to_string(w) +
                            " is smaller than the " + std::to_string(patch_) + " patch");
    }
  }
}

PatchOrigin PatchSampler::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, sizes_.size() - 1);
  PatchOrigin o;
  o.scene = pick(rng);
  std::uniform_int_distribution<Index> row(0, sizes_[o.scene].first - patch_);
  std::uniform_int_distribution<Index> col(0, sizes_[o.scene].second - patch_);
  o.row = row(rng);
  o.col = col(rng);
  return o;
}

namespace {

struct PreparedScene {
  Tensor4<float> image;  // standardised, selected bands
  Tensor4<float> density;
  Tensor4<float> labels;
};

Tensor4<float> select_bands(const RasterGrid& image, const std::vector<std::string>& names) {
  image.require_uniform();
  Tensor4<float> t(1, static_cast<Index>(names.size()), image.height(), image.width());
  for (std::size_t c = 0; c < names.size(); ++c) {
    auto it = std::find_if(image.bands.begin(), image.bands.end(),
                           [&](const Band& b) { return b.name == names[c]; });
    if (it == image.bands.end()) {
      throw ValidationError("band mismatch: image lacks band '" + names[c] + "' required by the model");
    }
    t.plane(0, static_cast<Index>(c)) = it->data;
  }
  return t;
}

void standardise(Tensor4<float>& t, const Eigen::ArrayXf& mean, const Eigen::ArrayXf& sd) {
  for (Index c = 0; c < t.c(); ++c) t.plane(0, c) = (t.plane(0, c) - mean[c]) / sd[c];
}

std::pair<Eigen::ArrayXf, Eigen::ArrayXf> channel_stats(const Dataset& scenes,
                                                        const std::vector<std::string>& names) {
  const auto C = static_cast<Index>(names.size());
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(C), sq = Eigen::ArrayXd::Zero(C);
  double count = 0;
  for (const auto& s : scenes) {
    const Tensor4<float> t = select_bands(s.image, names);
    for (Index c = 0; c < C; ++c) {
      const auto p = t.plane(0, c).cast<double>();
      sum[c] += p.sum();
      sq[c] += p.square().sum();
    }
    count += static_cast<double>(t.shape().plane());
  }
  const Eigen::ArrayXd mean = sum / count;
  const Eigen::ArrayXd var = (sq / count - mean.square()).max(0.0);
  return {mean.cast<float>(), var.sqrt().max(1e-6).cast<float>()};
}

PreparedScene prepare(const SceneData& s, const Checkpoint& ck) {
  PreparedScene p;
  p.image = select_bands(s.image, ck.band_names);
  standardise(p.image, ck.input_mean, ck.input_std);
  if (s.density.rows() != p.image.h() || s.density.cols() != p.image.w() ||
      s.mask.rows() != p.image.h() || s.mask.cols() != p.image.w()) {
    throw ValidationError("scene target does not match its image grid");
  }
  p.density = Tensor4<float>(1, 1, p.image.h(), p.image.w());
  p.density.plane(0, 0) = s.density.cast<float>();
  p.labels = Tensor4<float>(1, 1, p.image.h(), p.image.w());
  p.labels.plane(0, 0) = s.mask.cast<float>();
  return p;
}

void copy_patch(const Tensor4<float>& src, Index row, Index col, Index size, Tensor4<float>& dst, Index n) {
  for (Index c = 0; c < src.c(); ++c) dst.plane(n, c) = src.plane(0, c).block(row, col, size, size);
}

std::string serialise_rng(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 restore_rng(const std::string& state) {
  std::mt19937_64 rng;
  std::istringstream is(state);
  is >> rng;
  if (!is) throw ValidationError("checkpoint: corrupt RNG state");
  return rng;
}

std::mt19937_64 sampler_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5a11u};
  return std::mt19937_64(seq);
}

Checkpoint fresh_checkpoint(const TrainConfig& config, const Dataset& scenes) {
  const auto names = select_band_names(scenes.front().image.band_names(), config.bands);
  Checkpoint ck{Model<float>(config.model_spec(static_cast<Index>(names.size())), config.seed),
                config.bands,
                names,
                {},
                {},
                AdamOptimizer(config.learning_rate, config.beta1, config.beta2, config.adam_epsilon),
                0,
                serialise_rng(sampler_rng(config.seed))};
  std::tie(ck.input_mean, ck.input_std) = channel_stats(scenes, names);
  return ck;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& scenes, std::optional<Checkpoint> resume) {
  config.validate();
  if (scenes.empty()) throw ValidationError("train: dataset has no scenes");

  TrainResult result{resume ? std::move(*resume) : fresh_checkpoint(config, scenes), {}};
  Checkpoint& ck = result.checkpoint;
  if (resume && (ck.model.spec().kind != config.arch || ck.subset != config.bands)) {
    throw ValidationError("train: checkpoint architecture or band subset differs from the config");
  }
  ck.model.set_mode(BnMode::train);

  std::vector<PreparedScene> prepared;
  std::vector<std::pair<Index, Index>> sizes;
  for (const auto& s : scenes) {
    prepared.push_back(prepare(s, ck));
    sizes.emplace_back(prepared.back().image.h(), prepared.back().image.w());
  }
  const PatchSampler sampler(sizes, config.patch_size);
  std::mt19937_64 rng = restore_rng(ck.rng_state);

  const Index P = config.patch_size, B = config.batch_size;
  const Index C = static_cast<Index>(ck.band_names.size());
  Tensor4<float> batch(B, C, P, P), density(B, 1, P, P), labels(B, 1, P, P);

  for (long step = ck.step; step < config.steps; ++step) {
    for (Index n = 0; n < B; ++n) {
      const PatchOrigin o = sampler.sample(rng);
      const PreparedScene& s = prepared[o.scene];
      copy_patch(s.image, o.row, o.col, P, batch, n);
      copy_patch(s.density, o.row, o.col, P, density, n);
      copy_patch(s.labels, o.row, o.col, P, labels, n);
    }
    ck.model.zero_grad();
    const ModelOutput<float> out = ck.model.forward(batch);
    const JointLoss<float> loss = joint_loss(out.semantic, out.density, labels, density);
    if (!std::isfinite(loss.breakdown.total)) {
      throw std::runtime_error("train: non-finite loss at step " + std::to_string(step + 1));
    }
    ck.model.backward(loss.grad_semantic, loss.grad_density);
    ck.optimizer.step(ck.model);
    result.trace.push_back(loss.breakdown);
    ck.step = step + 1;
    if (config.checkpoint_every > 0 && ck.step % config.checkpoint_every == 0) {
      ck.rng_state = serialise_rng(rng);
      save_checkpoint(config.checkpoint_path, ck);
    }
  }
  ck.rng_state = serialise_rng(rng);
  ck.model.set_mode(BnMode::eval);
  return result;
}

namespace {

std::vector<std::uint32_t> u64_words(std::uint64_t v) {
  return {static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v >> 32)};
}

std::uint64_t words_u64(const std::vector<std::uint32_t>& w, std::size_t at) {
  return static_cast<std::uint64_t>(w.at(at)) | (static_cast<std::uint64_t>(w.at(at + 1)) << 32);
}

TensorRecord tensor_record(const std::string& name, const Tensor4<float>& t) {
  const Shape4& s = t.shape();
  return TensorRecord{name,
                      {static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.c),
                       static_cast<std::uint64_t>(s.h), static_cast<std::uint64_t>(s.w)},
                      std::vector<float>(t.data().data(), t.data().data() + t.size())};
}

TensorRecord vector_record(const std::string& name, const Eigen::ArrayXf& v) {
  return TensorRecord{name, {static_cast<std::uint64_t>(v.size())},
                      std::vector<float>(v.data(), v.data() + v.size())};
}

Eigen::ArrayXf record_vector(const TensorRecord& r) {
  return Eigen::Map<const Eigen::ArrayXf>(r.values.data(), static_cast<Index>(r.values.size()));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const ModelSpec& spec = ck.model.spec();
  std::vector<TensorRecord> records;
  records.push_back(words_record(
      "meta.arch", {static_cast<std::uint32_t>(spec.kind), static_cast<std::uint32_t>(spec.input_channels),
                    static_cast<std::uint32_t>(spec.stem_width),
                    static_cast<std::uint32_t>(spec.bottleneck_width),
                    static_cast<std::uint32_t>(spec.block_count)}));
  records.push_back(words_record("meta.subset", {static_cast<std::uint32_t>(ck.subset)}));
  std::string bands;
  for (const auto& b : ck.band_names) bands += b + "\n";
  records.push_back(text_record("meta.bands", bands));
  records.push_back(words_record("meta.step", u64_words(static_cast<std::uint64_t>(ck.step))));
  records.push_back(text_record("meta.rng", ck.rng_state));
  records.push_back(vector_record("input.mean", ck.input_mean));
  records.push_back(vector_record("input.std", ck.input_std));
  for (const auto& p : ck.model.parameters()) records.push_back(tensor_record("param." + p.name, *p.tensor));
  for (const auto& b : ck.model.buffers()) records.push_back(tensor_record("buffer." + b.name, *b.tensor));
  records.push_back(words_record("adam.iterations", u64_words(static_cast<std::uint64_t>(ck.optimizer.iterations()))));
  for (const auto& [name, m] : ck.optimizer.first_moments()) records.push_back(vector_record("adam.m." + name, m));
  for (const auto& [name, v] : ck.optimizer.second_moments()) records.push_back(vector_record("adam.v." + name, v));
  write_records(path, records);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::map<std::string, TensorRecord> by_name;
  for (auto& r : read_records(path)) by_name.emplace(r.name, std::move(r));
  auto need = [&](const std::string& name) -> const TensorRecord& {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw ValidationError("checkpoint '" + path.string() + "' lacks record '" + name + "'");
    }
    return it->second;
  };

  const auto arch = record_words(need("meta.arch"));
  if (arch.size() != 5 || arch[0] > 2) throw ValidationError("checkpoint: malformed meta.arch");
  ModelSpec spec{static_cast<ArchKind>(arch[0]), static_cast<Index>(arch[1]), static_cast<Index>(arch[2]),
                 static_cast<Index>(arch[3]), static_cast<int>(arch[4])};
  const auto subset = record_words(need("meta.subset"));
  if (subset.size() != 1 || subset[0] > 3) throw ValidationError("checkpoint: malformed meta.subset");

  Checkpoint ck{Model<float>(spec, 0), static_cast<BandSubset>(subset[0]), {}, {}, {}, {}, 0, ""};
  std::istringstream bands(record_text(need("meta.bands")));
  for (std::string line; std::getline(bands, line);) ck.band_names.push_back(line);
  if (static_cast<Index>(ck.band_names.size()) != spec.input_channels) {
    throw ValidationError("checkpoint: band list does not match the model input");
  }
  ck.step = static_cast<long>(words_u64(record_words(need("meta.step")), 0));
  ck.rng_state = record_text(need("meta.rng"));
  ck.input_mean = record_vector(need("input.mean"));
  ck.input_std = record_vector(need("input.std"));

  auto restore = [&](const std::string& name, Tensor4<float>& t) {
    const TensorRecord& r = need(name);
    const Shape4& s = t.shape();
    const std::vector<std::uint64_t> dims{static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.c),
                                          static_cast<std::uint64_t>(s.h), static_cast<std::uint64_t>(s.w)};
    if (r.dims != dims) throw ValidationError("checkpoint: record '" + name + "' has the wrong shape");
    std::copy(r.values.begin(), r.values.end(), t.data().data());
  };
  for (auto& p : ck.model.parameters()) restore("param." + p.name, *p.tensor);
  for (auto& b : ck.model.buffers()) restore("buffer." + b.name, *b.tensor);

  ck.optimizer.set_iterations(static_cast<long>(words_u64(record_words(need("adam.iterations")), 0)));
  for (const auto& [name, r] : by_name) {
    if (name.rfind("adam.m.", 0) == 0) ck.optimizer.first_moments()[name.substr(7)] = record_vector(r);
    if (name.rfind("adam.v.", 0) == 0) ck.optimizer.second_moments()[name.substr(7)] = record_vector(r);
  }
  ck.model.set_mode(BnMode::eval);
  return ck;
}

Prediction predict(const Checkpoint& ck, const RasterGrid& image, const PredictOptions& options) {
  Tensor4<float> input = select_bands(image, ck.band_names);
  standardise(input, ck.input_mean, ck.input_std);
  const Index H = input.h(), W = input.w();

  Prediction pred{Raster<double>(H, W), Mask(H, W)};
  auto write = [&](const ModelOutput<float>& out, Index y0, Index x0, Index oy, Index ox, Index h, Index w) {
    for (Index y = 0; y < h; ++y) {
      for (Index x = 0; x < w; ++x) {
        pred.density(y0 + y, x0 + x) = out.density(0, 0, oy + y, ox + x);
        pred.mask(y0 + y, x0 + x) = out.semantic(0, 1, oy + y, ox + x) > out.semantic(0, 0, oy + y, ox + x);
      }
    }
  };

  const bool strided = ck.model.spec().kind == ArchKind::strided_baseline;
  const bool fits = H <= options.tile && W <= options.tile;
  if (strided || options.whole_image || (fits && !options.force_tiling)) {
    write(ck.model.infer(input), 0, 0, 0, 0, H, W);
    return pred;
  }

  const Index core = options.tile - 2 * options.overlap;
  if (core < 1) throw ValidationError("predict: tile must exceed twice the overlap");
  for (Index cy = 0; cy < H; cy += core) {
    for (Index cx = 0; cx < W; cx += core) {
      const Index ch = std::min(core, H - cy), cw = std::min(core, W - cx);
      const Index y0 = std::max<Index>(0, cy - options.overlap), x0 = std::max<Index>(0, cx - options.overlap);
      const Index y1 = std::min(H, cy + ch + options.overlap), x1 = std::min(W, cx + cw + options.overlap);
      Tensor4<float> tile(1, input.c(), y1 - y0, x1 - x0);
      for (Index c = 0; c < input.c(); ++c) tile.plane(0, c) = input.plane(0, c).block(y0, x0, y1 - y0, x1 - x0);
      write(ck.model.infer(tile), cy, cx, cy - y0, cx - x0, ch, cw);
    }
  }
  return pred;
}

MetricsReport evaluate(const Predictor& predictor, const Dataset& scenes) {
  if (scenes.empty()) throw ValidationError("evaluate: no scenes");
  std::vector<Prediction> preds(scenes.size());
  const auto workers = static_cast<std::size_t>(std::max(1, configure_threads()));
  if (workers == 1 || scenes.size() == 1) {
    for (std::size_t i = 0; i < scenes.size(); ++i) preds[i] = predictor(scenes[i]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < scenes.size(); i += workers) preds[i] = predictor(scenes[i]);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Index total = 0;
  for (const auto& s : scenes) total += s.density.size();
  DensityVector pd(total), gd(total);
  MaskVector pm(total), gm(total);
  Index at = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Index n = scenes[i].density.size();
    if (preds[i].density.size() != n || preds[i].mask.size() != n || scenes[i].mask.size() != n) {
      throw ValidationError("evaluate: prediction and ground truth grids differ");
    }
    pd.segment(at, n) = flatten(preds[i].density);
    gd.segment(at, n) = flatten(scenes[i].density);
    pm.segment(at, n) = flatten(preds[i].mask);
    gm.segment(at, n) = flatten(scenes[i].mask);
    at += n;
  }
  return compute_report(pd, gd, pm, gm);
}

MetricsReport evaluate(const Checkpoint& checkpoint, const Dataset& scenes) {
  return evaluate([&](const SceneData& s) { return predict(checkpoint, s.image); }, scenes);
}

std::vector<AblationRow> ablate_bands(const TrainConfig& base, const Dataset& train_scenes,
                                      const Dataset& test_scenes, const std::vector<BandSubset>& subsets) {
  if (subsets.empty()) throw ValidationError("ablate: no band subsets requested");
  std::vector<AblationRow> rows;
  for (BandSubset subset : subsets) {
    TrainConfig cfg = base;
    cfg.bands = subset;
    cfg.checkpoint_every = 0;
    const TrainResult r = train(cfg, train_scenes);
    rows.push_back({subset, r.checkpoint.model.spec().input_channels, evaluate(r.checkpoint, test_scenes)});
  }
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "bands" << std::right << std::setw(9) << "channels" << std::setw(9)
     << "iou" << std::setw(10) << "mse" << std::setw(10) << "mae" << std::setw(10) << "diff%" << "\n";
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(8) << to_string(r.subset) << std::right << std::setw(9) << r.channels
       << std::setprecision(4) << std::setw(9) << r.report.iou << std::setw(10) << r.report.mse
       << std::setw(10) << r.report.mae << std::setprecision(2) << std::setw(10)
       << (r.report.diff_pct ? *r.report.diff_pct : std::nan("")) << "\n";
  }
  return os.str();
}

int configure_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("SPDX_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) n = requested;
  }
  Eigen::setNbThreads(n);
  return n;
}

}  // namespace spd
