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

#ifndef SPD_RASTER_HPP
#define SPD_RASTER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spd/tensor.hpp"

namespace spd {

template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Mask = Raster<std::uint8_t>;

struct Band {
  std::string name;
  double gsd_m = 10.0;
  Raster<float> data;
};

/// Multi-band image. Bands may sit on different grids until resampled.
struct RasterGrid {
  std::vector<Band> bands;

  Index band_count() const { return static_cast<Index>(bands.size()); }
  Index height() const { return bands.empty() ? 0 : bands.front().data.rows(); }
  Index width() const { return bands.empty() ? 0 : bands.front().data.cols(); }
  std::vector<std::string> band_names() const;
  /// Throws unless every band shares one grid and GSD.
  void require_uniform() const;
  /// (1, bands, h, w) tensor of a uniform grid.
  Tensor4<float> to_tensor() const;
};

struct Point {
  Index row = 0;
  Index col = 0;
  bool operator==(const Point&) const = default;
};

/// Object positions on the high-resolution grid. Duplicates are allowed.
struct PointAnnotationSet {
  Index grid_h = 0;
  Index grid_w = 0;
  std::vector<Point> points;
  int class_id = 1;

  void validate() const;
};

}  // namespace spd

#endif  // SPD_RASTER_HPP
