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

#include "spd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace spd {
namespace {

void require_same_length(Index a, Index b, const char* what) {
  if (a != b) {
    throw ValidationError(std::string(what) + ": size mismatch " + std::to_string(a) + " vs " +
                          std::to_string(b));
  }
}

double ratio_or(double num, double den, double fallback) { return den > 0 ? num / den : fallback; }

}  // namespace

SegmentationScores segmentation_metrics(const MaskVector& pred, const MaskVector& gt) {
  require_same_length(pred.size(), gt.size(), "segmentation_metrics");
  double tp = 0, fp = 0, fn = 0;
  for (Index i = 0; i < pred.size(); ++i) {
    if (pred[i] > 1 || gt[i] > 1) throw ValidationError("segmentation_metrics: masks must be binary");
    const bool p = pred[i] != 0, g = gt[i] != 0;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  if (tp + fp + fn == 0) return {1.0, 1.0, 1.0};
  return {tp / (tp + fp + fn), ratio_or(tp, tp + fp, 0.0), ratio_or(tp, tp + fn, 0.0)};
}

DensityErrors density_errors(const DensityVector& pred, const DensityVector& gt) {
  require_same_length(pred.size(), gt.size(), "density_errors");
  if (pred.size() == 0) throw ValidationError("density_errors: empty maps");
  const DensityVector diff = pred - gt;
  return {diff.square().mean(), diff.abs().mean()};
}

std::vector<long> density_histogram(const DensityVector& values, double upper, int bin_count) {
  if (bin_count < 1) throw ValidationError("histogram: bin count must be positive");
  std::vector<long> counts(bin_count, 0);
  for (Index i = 0; i < values.size(); ++i) {
    const double v = std::max(values[i], 0.0);
    int bin = upper > 0 ? static_cast<int>(std::floor(v / upper * bin_count)) : 0;
    counts[std::clamp(bin, 0, bin_count - 1)] += 1;
  }
  return counts;
}

double chi2_distance(const DensityVector& pred, const DensityVector& gt, HistogramSpec spec) {
  require_same_length(pred.size(), gt.size(), "chi2_distance");
  const double upper = std::max({pred.size() ? pred.maxCoeff() : 0.0, gt.size() ? gt.maxCoeff() : 0.0, 0.0});
  const auto h = density_histogram(pred, upper, spec.bin_count);
  const auto g = density_histogram(gt, upper, spec.bin_count);
  double chi2 = 0.0;
  for (int i = 0; i < spec.bin_count; ++i) {
    const double s = static_cast<double>(h[i] + g[i]);
    if (s > 0) chi2 += std::pow(static_cast<double>(h[i] - g[i]), 2) / s;
  }
  return chi2;
}

CountSummary count_and_diff(const DensityVector& pred, const DensityVector& gt) {
  require_same_length(pred.size(), gt.size(), "count_and_diff");
  CountSummary s;
  s.gt_count = gt.max(0.0).sum();
  s.pred_count = pred.max(0.0).sum();
  if (s.gt_count > 0) s.diff_pct = 100.0 * (s.pred_count - s.gt_count) / s.gt_count;
  return s;
}

MetricsReport compute_report(const DensityVector& pred_density, const DensityVector& gt_density,
                             const MaskVector& pred_mask, const MaskVector& gt_mask) {
  require_same_length(pred_density.size(), pred_mask.size(), "compute_report");
  const auto seg = segmentation_metrics(pred_mask, gt_mask);
  const auto err = density_errors(pred_density, gt_density);
  const auto counts = count_and_diff(pred_density, gt_density);
  MetricsReport r;
  r.iou = seg.iou;
  r.precision = seg.precision;
  r.recall = seg.recall;
  r.mse = err.mse;
  r.mae = err.mae;
  r.chi2 = chi2_distance(pred_density, gt_density);
  r.gt_count = counts.gt_count;
  r.pred_count = counts.pred_count;
  r.diff_pct = counts.diff_pct;
  r.pixels = static_cast<std::size_t>(pred_density.size());
  return r;
}

std::string MetricsReport::to_key_value() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "iou=" << iou << "\nprecision=" << precision << "\nrecall=" << recall << "\nmse=" << mse
     << "\nmae=" << mae << "\nchi2=" << chi2 << "\ngt_count=" << gt_count
     << "\npred_count=" << pred_count << "\ndiff_pct=";
  if (diff_pct) {
    os << *diff_pct;
  } else {
    os << "none";
  }
  os << "\npixels=" << pixels << "\n";
  return os.str();
}

std::string MetricsReport::to_json() const {
  nlohmann::json j{{"iou", iou},         {"precision", precision}, {"recall", recall},
                   {"mse", mse},         {"mae", mae},             {"chi2", chi2},
                   {"gt_count", gt_count}, {"pred_count", pred_count}, {"pixels", pixels}};
  j["diff_pct"] = diff_pct ? nlohmann::json(*diff_pct) : nlohmann::json(nullptr);
  return j.dump();
}

}  // namespace spd
