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

#ifndef SPD_SYNTH_HPP
#define SPD_SYNTH_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "spd/gt.hpp"

namespace spd {

/// Reflectance of each scene class in one spectral band. gsd_factor is the
/// band's native GSD in units of the target GSD (1 or 2).
struct BandSpec {
  std::string name;
  int gsd_factor = 1;
  double target = 0.0;
  double clutter = 0.0;
  double background = 0.0;
};

/// Thirteen bands: B2, B3, B4 and B8 on the target grid, the rest at twice
/// the target GSD.
std::vector<BandSpec> default_band_table();

enum class Placement { grid, poisson };

struct SceneConfig {
  Index scene_h = 128;
  Index scene_w = 128;
  Index k = kDefaultDownscale;
  double target_gsd_m = 10.0;
  std::vector<BandSpec> band_table = default_band_table();

  /// Objects per low-resolution pixel inside plantations.
  double object_density = 0.97;
  /// Object footprint area over low-resolution pixel area.
  double object_area_ratio = 0.36;
  double clutter_density = 0.8;
  double clutter_area_ratio = 0.36;

  double noise_sigma = 0.01;
  Placement placement = Placement::grid;

  /// Smoothing length (low-res pixels) of the plantation blob field; small
  /// values give fragmented, high-frequency plantations.
  double plantation_scale = 6.0;
  double plantation_cover_min = 0.3;
  double plantation_cover_max = 0.7;
  double clutter_cover = 0.3;
  /// Relative amplitude of smooth multiplicative background variation.
  double background_variation = 0.1;

  std::uint64_t seed = 0;

  void validate() const;
};

/// Named configurations used by the CLI and the acceptance suite.
///   coconut       - Table-1-like tree plantations, clutter spectrally distinct
///   confusable    - clutter identical to the target in B2/B3/B4 only
///   cars          - dense small objects, no class signal outside RGB
///   high_frequency - coconut spectra on fragmented plantations
SceneConfig scene_preset(std::string_view name);

struct SyntheticScene {
  PointAnnotationSet annotations;
  PointAnnotationSet clutter_points;
  RasterGrid image;
  DensitySemanticTarget target;
  /// Low-res pixels whose footprint is mostly inside a target plantation.
  Mask plantation;
  /// Fractional object cover of each low-res pixel.
  Raster<double> target_cover;
  Raster<double> clutter_cover;
};

SyntheticScene generate_scene(const SceneConfig& config);

enum class BandSubset { all, rgb, rgbi, no_rgb };

std::string to_string(BandSubset subset);
BandSubset parse_band_subset(std::string_view name);

/// Names kept by `subset`, in the order they appear in `available`.
std::vector<std::string> select_band_names(const std::vector<std::string>& available,
                                           BandSubset subset);

RasterGrid band_subset(const RasterGrid& image, BandSubset subset);

}  // namespace spd

#endif  // SPD_SYNTH_HPP
