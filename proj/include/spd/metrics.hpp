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

#ifndef SPD_METRICS_HPP
#define SPD_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "spd/raster.hpp"

namespace spd {

using DensityVector = Eigen::ArrayXd;
using MaskVector = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;

struct SegmentationScores {
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct DensityErrors {
  double mse = 0.0;
  double mae = 0.0;
};

struct CountSummary {
  double gt_count = 0.0;
  double pred_count = 0.0;
  /// Empty when the ground truth holds no objects.
  std::optional<double> diff_pct;
};

struct HistogramSpec {
  int bin_count = 100;
};

struct MetricsReport {
  double iou = 0.0, precision = 0.0, recall = 0.0;
  double mse = 0.0, mae = 0.0, chi2 = 0.0;
  double gt_count = 0.0, pred_count = 0.0;
  std::optional<double> diff_pct;
  std::size_t pixels = 0;

  /// `key=value` lines in a fixed order; a missing diff is written as "none".
  std::string to_key_value() const;
  /// One JSON object.
  std::string to_json() const;
};

/// Object class (1) is positive. Two empty masks score 1 everywhere; an
/// empty denominator otherwise scores 0.
SegmentationScores segmentation_metrics(const MaskVector& pred, const MaskVector& gt);

DensityErrors density_errors(const DensityVector& pred, const DensityVector& gt);

/// Raw-count histograms of both maps (negatives clipped to 0) on shared
/// uniform bins over [0, max of both]; sum of (h-g)^2/(h+g) over non-empty
/// bins.
double chi2_distance(const DensityVector& pred, const DensityVector& gt, HistogramSpec spec = {});

/// Bin counts used by chi2_distance for one map over [0, upper].
std::vector<long> density_histogram(const DensityVector& values, double upper, int bin_count);

CountSummary count_and_diff(const DensityVector& pred, const DensityVector& gt);

MetricsReport compute_report(const DensityVector& pred_density, const DensityVector& gt_density,
                             const MaskVector& pred_mask, const MaskVector& gt_mask);

/// Flattens a raster in row-major order.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> flatten(const Raster<Scalar>& r) {
  return Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(r.data(), r.size());
}

}  // namespace spd

#endif  // SPD_METRICS_HPP
