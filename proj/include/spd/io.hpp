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

// On-disk formats.
//
// Raster (.spdr):
//   "SPDR1\n"
//   "<bands> <h> <w> <gsd_m>\n"
//   one band name per line
//   bands*h*w little-endian float32, band-major then row-major
//
// Annotations (text):
//   "<grid_h> <grid_w>\n" "<count>\n" then one "<row> <col>" line per point
//
// Tensor records (checkpoints):
//   "SPCK1" <version:u8>, then until EOF:
//   <name_len:u64> <name bytes> <rank:u64> <dims:u64 x rank> <float32 x prod(dims)>
//   all integers little-endian.

#ifndef SPD_IO_HPP
#define SPD_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spd/raster.hpp"

namespace spd {

void write_raster(const std::filesystem::path& path, const RasterGrid& grid);
RasterGrid read_raster(const std::filesystem::path& path);

/// Single-band helpers for density and mask rasters.
RasterGrid density_grid(const Raster<double>& density, double gsd_m);
RasterGrid mask_grid(const Mask& mask, double gsd_m);
Raster<double> grid_to_density(const RasterGrid& grid);
Mask grid_to_mask(const RasterGrid& grid);

void write_annotations(const std::filesystem::path& path, const PointAnnotationSet& annotations);
PointAnnotationSet read_annotations(const std::filesystem::path& path);

struct TensorRecord {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> values;
};

inline constexpr std::uint8_t kCheckpointVersion = 1;

void write_records(const std::filesystem::path& path, const std::vector<TensorRecord>& records);
std::vector<TensorRecord> read_records(const std::filesystem::path& path);

/// Integer and text payloads travel as raw 32-bit patterns in float slots.
TensorRecord words_record(std::string name, const std::vector<std::uint32_t>& words);
std::vector<std::uint32_t> record_words(const TensorRecord& record);
TensorRecord text_record(std::string name, const std::string& text);
std::string record_text(const TensorRecord& record);

}  // namespace spd

#endif  // SPD_IO_HPP
