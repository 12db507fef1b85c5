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

#include "spd/gt.hpp"

#include <cmath>
#include <numbers>

#include "spd/ops.hpp"

namespace spd {

std::vector<std::string> RasterGrid::band_names() const {
  std::vector<std::string> names;
  names.reserve(bands.size());
  for (const auto& b : bands) names.push_back(b.name);
  return names;
}

void RasterGrid::require_uniform() const {
  if (bands.empty()) throw ValidationError("raster grid has no bands");
  for (const auto& b : bands) {
    if (b.data.rows() != height() || b.data.cols() != width() || b.gsd_m != bands.front().gsd_m) {
      throw ValidationError("band '" + b.name + "' is not on the common " +
                            std::to_string(height()) + "x" + std::to_string(width()) + " grid");
    }
  }
}

Tensor4<float> RasterGrid::to_tensor() const {
  require_uniform();
  Tensor4<float> t(1, band_count(), height(), width());
  for (Index c = 0; c < band_count(); ++c) t.plane(0, c) = bands[c].data;
  return t;
}

void PointAnnotationSet::validate() const {
  if (grid_h < 1 || grid_w < 1) throw ValidationError("annotation grid must be at least 1x1");
  for (const auto& p : points) {
    if (p.row < 0 || p.row >= grid_h || p.col < 0 || p.col >= grid_w) {
      throw ValidationError("annotation point (" + std::to_string(p.row) + ", " +
                            std::to_string(p.col) + ") lies outside the " + std::to_string(grid_h) +
                            "x" + std::to_string(grid_w) + " grid");
    }
  }
}

double gaussian_sigma(Index k) { return static_cast<double>(k) / std::numbers::pi; }

Raster<double> rasterize_points(const PointAnnotationSet& annotations) {
  annotations.validate();
  Raster<double> counts = Raster<double>::Zero(annotations.grid_h, annotations.grid_w);
  for (const auto& p : annotations.points) counts(p.row, p.col) += 1.0;
  return counts;
}

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("gaussian_smooth: sigma must be positive");
  const auto radius = static_cast<Index>(std::ceil(3.0 * sigma));
  std::vector<double> taps(radius + 1);
  double total = 0.0;
  for (Index i = 0; i <= radius; ++i) {
    taps[i] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += i == 0 ? taps[i] : 2.0 * taps[i];
  }
  for (auto& t : taps) t /= total;
  return taps;
}

namespace {

// Scatter-normalised 1-D pass along rows (axis 1) of `in`: every source
// sample spreads its value over the in-bounds taps only.
Raster<double> smooth_rows(const Raster<double>& in, const std::vector<double>& taps) {
  const Index radius = static_cast<Index>(taps.size()) - 1;
  const Index len = in.cols();
  std::vector<double> inv_norm(len);
  for (Index i = 0; i < len; ++i) {
    double z = 0.0;
    for (Index d = -radius; d <= radius; ++d) {
      if (i + d >= 0 && i + d < len) z += taps[std::abs(d)];
    }
    inv_norm[i] = 1.0 / z;
  }
  Raster<double> out = Raster<double>::Zero(in.rows(), in.cols());
  for (Index r = 0; r < in.rows(); ++r) {
    for (Index i = 0; i < len; ++i) {
      const double v = in(r, i);
      if (v == 0.0) continue;
      const double s = v * inv_norm[i];
      const Index lo = std::max<Index>(0, i - radius);
      const Index hi = std::min<Index>(len - 1, i + radius);
      for (Index j = lo; j <= hi; ++j) out(r, j) += s * taps[std::abs(j - i)];
    }
  }
  return out;
}

}  // namespace

Raster<double> gaussian_smooth(const Raster<double>& counts, double sigma) {
  const std::vector<double> taps = gaussian_taps(sigma);
  const Raster<double> rows = smooth_rows(counts, taps);
  return smooth_rows(rows.transpose(), taps).transpose();
}

Raster<double> downsample_density(const Raster<double>& smoothed, Index k) {
  if (k < 1) throw ValidationError("downsample_density: K must be positive");
  if (smoothed.rows() % k != 0 || smoothed.cols() % k != 0) {
    throw ValidationError("downsample_density: " + std::to_string(smoothed.rows()) + "x" +
                          std::to_string(smoothed.cols()) + " is not divisible by K=" +
                          std::to_string(k));
  }
  const Index h = smoothed.rows() / k, w = smoothed.cols() / k;
  const double area = static_cast<double>(k * k);
  Raster<double> out(h, w);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) out(y, x) = smoothed.block(y * k, x * k, k, k).mean() * area;
  }
  return out;
}

Mask derive_semantic_mask(const Raster<double>& density) {
  return (density > kMaskThreshold).cast<std::uint8_t>();
}

DensitySemanticTarget build_target(const PointAnnotationSet& annotations, Index k) {
  DensitySemanticTarget target;
  target.k = k;
  target.sigma = gaussian_sigma(k);
  target.density = downsample_density(gaussian_smooth(rasterize_points(annotations), target.sigma), k);
  target.mask = derive_semantic_mask(target.density);
  return target;
}

Band resample_band(const Band& band, double target_gsd_m) {
  if (!(target_gsd_m > 0.0) || !(band.gsd_m > 0.0)) {
    throw ValidationError("resample_band: GSD values must be positive");
  }
  const double ratio = band.gsd_m / target_gsd_m;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9) {
    throw ValidationError("resample_band: band '" + band.name + "' at " +
                          std::to_string(band.gsd_m) + " m is not an integer multiple of " +
                          std::to_string(target_gsd_m) + " m");
  }
  const auto factor = static_cast<Index>(rounded);
  Tensor4<float> t(1, 1, band.data.rows(), band.data.cols());
  t.plane(0, 0) = band.data;
  const Tensor4<float> up = bilinear_resize(t, band.data.rows() * factor, band.data.cols() * factor);
  return Band{band.name, target_gsd_m, Raster<float>(up.plane(0, 0))};
}

}  // namespace spd
