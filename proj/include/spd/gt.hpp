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

// Ground truth from point annotations: counts are smoothed with a Gaussian
// of sigma = K/pi on the fine grid, block-summed down by K so each coarse
// pixel holds the expected number of objects it covers, and thresholded at
// 0.5 for the semantic label.

#ifndef SPD_GT_HPP
#define SPD_GT_HPP

#include "spd/raster.hpp"

namespace spd {

inline constexpr Index kDefaultDownscale = 10;
inline constexpr double kMaskThreshold = 0.5;

/// Density target paired with its semantic mask on the low-resolution grid.
struct DensitySemanticTarget {
  Raster<double> density;
  Mask mask;
  Index k = kDefaultDownscale;
  double sigma = 0.0;
};

double gaussian_sigma(Index k);

Raster<double> rasterize_points(const PointAnnotationSet& annotations);

/// Isotropic Gaussian truncated at radius ceil(3 sigma). Each source pixel's
/// kernel is renormalised over its in-bounds taps, so mass is conserved at
/// the borders.
Raster<double> gaussian_smooth(const Raster<double>& counts, double sigma);

/// Normalised 1-D taps used by gaussian_smooth, index 0 is the centre.
std::vector<double> gaussian_taps(double sigma);

/// k x k mean pooling scaled by k^2 (a block sum).
Raster<double> downsample_density(const Raster<double>& smoothed, Index k);

/// Strict threshold: density > 0.5 is object.
Mask derive_semantic_mask(const Raster<double>& density);

DensitySemanticTarget build_target(const PointAnnotationSet& annotations, Index k);

/// Bilinear upsampling of a band whose GSD is an integer multiple of
/// `target_gsd_m`.
Band resample_band(const Band& band, double target_gsd_m);

}  // namespace spd

#endif  // SPD_GT_HPP
