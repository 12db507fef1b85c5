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

#include "spd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "spd/ops.hpp"

namespace spd {

std::vector<BandSpec> default_band_table() {
  // name, gsd factor, target, clutter, background
  return {
      {"B1", 2, 0.03, 0.05, 0.10},  {"B2", 1, 0.04, 0.06, 0.12},  {"B3", 1, 0.07, 0.09, 0.15},
      {"B4", 1, 0.04, 0.08, 0.18},  {"B5", 2, 0.10, 0.12, 0.20},  {"B6", 2, 0.30, 0.20, 0.22},
      {"B7", 2, 0.40, 0.25, 0.24},  {"B8", 1, 0.45, 0.28, 0.25},  {"B8A", 2, 0.46, 0.29, 0.26},
      {"B9", 2, 0.15, 0.12, 0.10},  {"B10", 2, 0.02, 0.02, 0.02}, {"B11", 2, 0.20, 0.25, 0.30},
      {"B12", 2, 0.10, 0.18, 0.25},
  };
}

namespace {

const std::set<std::string>& rgb_names() {
  static const std::set<std::string> names{"B2", "B3", "B4"};
  return names;
}

bool is_rgb(const std::string& name) { return rgb_names().count(name) > 0; }

}  // namespace

void SceneConfig::validate() const {
  if (scene_h < 1 || scene_w < 1 || k < 1) {
    throw ValidationError("scene: dimensions and K must be positive");
  }
  if (!(target_gsd_m > 0.0)) throw ValidationError("scene: target GSD must be positive");
  if (band_table.empty()) throw ValidationError("scene: band table is empty");
  for (const auto& b : band_table) {
    if (b.gsd_factor != 1 && b.gsd_factor != 2) {
      throw ValidationError("scene: band '" + b.name + "' must sit at 1x or 2x the target GSD");
    }
    if (b.gsd_factor == 2 && (scene_h % 2 != 0 || scene_w % 2 != 0)) {
      throw ValidationError("scene: 2x GSD bands need even scene dimensions");
    }
  }
  auto check_objects = [](double density, double ratio, const char* what) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
      throw ValidationError(std::string("scene: ") + what + " area ratio must lie in (0, 1)");
    }
    if (!(density >= 0.0)) throw ValidationError(std::string("scene: ") + what + " density must be >= 0");
    if (density * ratio >= 1.0) {
      throw ValidationError(std::string("scene: ") + what + " objects cannot fit (density " +
                            std::to_string(density) + " x area ratio " + std::to_string(ratio) +
                            " covers a whole pixel)");
    }
  };
  check_objects(object_density, object_area_ratio, "target");
  check_objects(clutter_density, clutter_area_ratio, "clutter");
  if (!(noise_sigma >= 0.0)) throw ValidationError("scene: noise sigma must be >= 0");
  if (!(plantation_scale > 0.0)) throw ValidationError("scene: plantation scale must be positive");
  if (!(plantation_cover_min >= 0.0 && plantation_cover_min <= plantation_cover_max &&
        plantation_cover_max <= 1.0)) {
    throw ValidationError("scene: plantation cover range must satisfy 0 <= min <= max <= 1");
  }
  if (!(clutter_cover >= 0.0 && clutter_cover <= 1.0)) {
    throw ValidationError("scene: clutter cover must lie in [0, 1]");
  }
}

SceneConfig scene_preset(std::string_view name) {
  SceneConfig c;
  if (name == "coconut") return c;
  if (name == "confusable") {
    c.clutter_density = c.object_density;
    c.clutter_area_ratio = c.object_area_ratio;
    c.clutter_cover = 0.35;
    for (auto& b : c.band_table) {
      if (is_rgb(b.name)) b.clutter = b.target;
    }
    return c;
  }
  if (name == "cars") {
    c.object_density = 2.5;
    c.object_area_ratio = 0.26;
    c.clutter_density = 2.5;
    c.clutter_area_ratio = 0.26;
    c.plantation_scale = 4.0;
    for (auto& b : c.band_table) {
      if (b.name == "B2") b = {b.name, 1, 0.40, 0.05, 0.22};
      else if (b.name == "B3") b = {b.name, 1, 0.38, 0.06, 0.25};
      else if (b.name == "B4") b = {b.name, 1, 0.35, 0.07, 0.28};
      else b.target = b.clutter = b.background;
    }
    return c;
  }
  if (name == "high_frequency") {
    c.plantation_scale = 1.0;
    c.plantation_cover_min = 0.45;
    c.plantation_cover_max = 0.55;
    return c;
  }
  throw ValidationError("unknown scene preset '" + std::string(name) +
                        "' (expected coconut, confusable, cars or high_frequency)");
}

namespace {

// Smooth Gaussian random field at low resolution, rescaled to unit variance.
Raster<double> blob_field(Index h, Index w, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Raster<double> noise(h, w);
  for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(rng);
  Raster<double> field = gaussian_smooth(noise, scale);
  const double mean = field.mean();
  const double sd = std::sqrt((field - mean).square().mean());
  return (field - mean) / (sd > 0 ? sd : 1.0);
}

double upper_quantile_threshold(const Raster<double>& field, double cover) {
  std::vector<double> v(field.data(), field.data() + field.size());
  std::sort(v.begin(), v.end());
  if (cover <= 0.0) return std::numeric_limits<double>::infinity();
  if (cover >= 1.0) return -std::numeric_limits<double>::infinity();
  const auto idx = static_cast<std::size_t>(std::floor((1.0 - cover) * static_cast<double>(v.size())));
  return v[std::min(idx, v.size() - 1)];
}

Raster<float> upsample(const Raster<double>& field, Index h, Index w) {
  Tensor4<float> t(1, 1, field.rows(), field.cols());
  t.plane(0, 0) = field.cast<float>();
  return Raster<float>(bilinear_resize(t, h, w).plane(0, 0));
}

std::vector<Point> place_objects(const Raster<std::uint8_t>& allowed, double density, Index k,
                                 Placement placement, std::mt19937_64& rng) {
  std::vector<Point> points;
  if (density <= 0.0) return points;
  const Index H = allowed.rows(), W = allowed.cols();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (placement == Placement::grid) {
    const double spacing = static_cast<double>(k) / std::sqrt(density);
    const double oy = unit(rng) * spacing, ox = unit(rng) * spacing;
    const double jitter = 0.15 * spacing;
    for (double gy = oy; gy < H; gy += spacing) {
      for (double gx = ox; gx < W; gx += spacing) {
        const double y = gy + (2.0 * unit(rng) - 1.0) * jitter;
        const double x = gx + (2.0 * unit(rng) - 1.0) * jitter;
        const auto r = static_cast<Index>(std::floor(y));
        const auto c = static_cast<Index>(std::floor(x));
        if (r < 0 || r >= H || c < 0 || c >= W || !allowed(r, c)) continue;
        points.push_back({r, c});
      }
    }
    return points;
  }
  const double area = static_cast<double>(allowed.cast<Index>().sum());
  if (area == 0.0) return points;
  std::poisson_distribution<long> poisson(density / static_cast<double>(k * k) * area);
  const long n = poisson(rng);
  std::uniform_int_distribution<Index> row(0, H - 1), col(0, W - 1);
  while (static_cast<long>(points.size()) < n) {
    const Index r = row(rng), c = col(rng);
    if (allowed(r, c)) points.push_back({r, c});
  }
  return points;
}

void stamp_disks(Raster<std::uint8_t>& labels, const std::vector<Point>& points, double radius,
                 std::uint8_t value) {
  const auto reach = static_cast<Index>(std::ceil(radius));
  const double r2 = radius * radius;
  for (const auto& p : points) {
    for (Index dy = -reach; dy <= reach; ++dy) {
      for (Index dx = -reach; dx <= reach; ++dx) {
        if (static_cast<double>(dy * dy + dx * dx) > r2) continue;
        const Index y = p.row + dy, x = p.col + dx;
        if (y >= 0 && y < labels.rows() && x >= 0 && x < labels.cols()) labels(y, x) = value;
      }
    }
  }
}

Raster<double> block_mean(const Raster<double>& in, Index f) {
  Raster<double> out(in.rows() / f, in.cols() / f);
  for (Index y = 0; y < out.rows(); ++y) {
    for (Index x = 0; x < out.cols(); ++x) out(y, x) = in.block(y * f, x * f, f, f).mean();
  }
  return out;
}

}  // namespace

SyntheticScene generate_scene(const SceneConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index h = config.scene_h, w = config.scene_w, k = config.k;
  const Index H = h * k, W = w * k;

  // Plantation and clutter regions from thresholded smooth noise.
  const Raster<double> plant_field = blob_field(h, w, config.plantation_scale, rng);
  const double plant_cover = config.plantation_cover_min +
                             unit(rng) * (config.plantation_cover_max - config.plantation_cover_min);
  const double plant_thr = upper_quantile_threshold(plant_field, plant_cover);
  const Raster<double> clutter_field = blob_field(h, w, config.plantation_scale, rng);
  const double clutter_thr = upper_quantile_threshold(clutter_field, config.clutter_cover);
  const Raster<double> bg_field = blob_field(h, w, 8.0, rng);

  const Raster<float> plant_hi = upsample(plant_field, H, W);
  const Raster<float> clutter_hi = upsample(clutter_field, H, W);
  const Raster<std::uint8_t> plant_region = (plant_hi.cast<double>() > plant_thr).cast<std::uint8_t>();
  const Raster<std::uint8_t> clutter_region =
      ((clutter_hi.cast<double>() > clutter_thr) && (plant_region == 0)).cast<std::uint8_t>();

  SyntheticScene scene;
  scene.annotations = {H, W, place_objects(plant_region, config.object_density, k, config.placement, rng), 1};
  scene.clutter_points = {H, W,
                          place_objects(clutter_region, config.clutter_density, k, config.placement, rng), 2};

  // Hard-edged disks; targets are painted last.
  Raster<std::uint8_t> labels = Raster<std::uint8_t>::Zero(H, W);
  const double area_hi = static_cast<double>(k * k);
  stamp_disks(labels, scene.clutter_points.points,
              std::sqrt(config.clutter_area_ratio * area_hi / std::numbers::pi), 2);
  stamp_disks(labels, scene.annotations.points,
              std::sqrt(config.object_area_ratio * area_hi / std::numbers::pi), 1);

  scene.target_cover = block_mean((labels == 1).cast<double>(), k);
  scene.clutter_cover = block_mean((labels == 2).cast<double>(), k);
  scene.plantation = (block_mean(plant_region.cast<double>(), k) >= 0.5).cast<std::uint8_t>();
  const Raster<double> bg_mod = 1.0 + config.background_variation * bg_field;

  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& spec : config.band_table) {
    const Raster<double> clean = spec.background * bg_mod * (1.0 - scene.target_cover - scene.clutter_cover) +
                                 spec.target * scene.target_cover + spec.clutter * scene.clutter_cover;
    Raster<double> native = spec.gsd_factor == 1 ? clean : block_mean(clean, spec.gsd_factor);
    if (config.noise_sigma > 0.0) {
      for (Index i = 0; i < native.size(); ++i) native.data()[i] += config.noise_sigma * noise(rng);
    }
    Band band{spec.name, config.target_gsd_m * spec.gsd_factor, native.cast<float>()};
    scene.image.bands.push_back(spec.gsd_factor == 1 ? std::move(band)
                                                     : resample_band(band, config.target_gsd_m));
  }

  scene.target = build_target(scene.annotations, k);
  return scene;
}

std::string to_string(BandSubset subset) {
  switch (subset) {
    case BandSubset::all:
      return "all";
    case BandSubset::rgb:
      return "rgb";
    case BandSubset::rgbi:
      return "rgbi";
    case BandSubset::no_rgb:
      return "no_rgb";
  }
  return "unknown";
}

BandSubset parse_band_subset(std::string_view name) {
  if (name == "all") return BandSubset::all;
  if (name == "rgb") return BandSubset::rgb;
  if (name == "rgbi") return BandSubset::rgbi;
  if (name == "no_rgb") return BandSubset::no_rgb;
  throw ValidationError("unknown band subset '" + std::string(name) +
                        "' (expected all, rgb, rgbi or no_rgb)");
}

std::vector<std::string> select_band_names(const std::vector<std::string>& available,
                                           BandSubset subset) {
  std::set<std::string> wanted;
  switch (subset) {
    case BandSubset::all:
      return available;
    case BandSubset::rgb:
      wanted = rgb_names();
      break;
    case BandSubset::rgbi:
      wanted = rgb_names();
      wanted.insert("B8");
      break;
    case BandSubset::no_rgb: {
      std::vector<std::string> out;
      for (const auto& n : available) {
        if (!is_rgb(n)) out.push_back(n);
      }
      return out;
    }
  }
  std::vector<std::string> out;
  for (const auto& n : available) {
    if (wanted.count(n)) out.push_back(n);
  }
  if (out.size() != wanted.size()) {
    throw ValidationError("band subset '" + to_string(subset) + "' needs bands missing from the image");
  }
  return out;
}

RasterGrid band_subset(const RasterGrid& image, BandSubset subset) {
  const auto names = select_band_names(image.band_names(), subset);
  RasterGrid out;
  for (const auto& b : image.bands) {
    if (std::find(names.begin(), names.end(), b.name) != names.end()) out.bands.push_back(b);
  }
  return out;
}

}  // namespace spd
