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

#include "spd/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spd {
namespace {

constexpr char kRasterMagic[] = "SPDR1\n";
constexpr char kCheckpointMagic[] = "SPCK1";

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

void put_f32(std::ostream& out, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void read_f32(std::istream& in, float* dst, std::size_t count, const std::string& what) {
  std::vector<unsigned char> buf(count * 4);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw ValidationError(what + ": truncated float payload");
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(buf[4 * i + k]) << (8 * k);
    dst[i] = std::bit_cast<float>(u);
  }
}

}  // namespace

void write_raster(const std::filesystem::path& path, const RasterGrid& grid) {
  grid.require_uniform();
  auto out = open_out(path);
  std::ostringstream header;
  header.precision(17);
  header << kRasterMagic << grid.band_count() << ' ' << grid.height() << ' ' << grid.width() << ' '
         << grid.bands.front().gsd_m << '\n';
  for (const auto& b : grid.bands) {
    if (b.name.empty() || b.name.find('\n') != std::string::npos) {
      throw ValidationError("raster band names must be non-empty single lines");
    }
    header << b.name << '\n';
  }
  out << header.str();
  for (const auto& b : grid.bands) {
    for (Index i = 0; i < b.data.size(); ++i) put_f32(out, b.data.data()[i]);
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

RasterGrid read_raster(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string what = "raster '" + path.string() + "'";
  char magic[sizeof(kRasterMagic) - 1];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kRasterMagic, sizeof(magic)) != 0) {
    throw ValidationError(what + ": bad magic");
  }
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  long bands = 0, h = 0, w = 0;
  double gsd = 0;
  if (!(hs >> bands >> h >> w >> gsd) || bands < 1 || h < 1 || w < 1 || !(gsd > 0)) {
    throw ValidationError(what + ": malformed header '" + line + "'");
  }
  RasterGrid grid;
  for (long b = 0; b < bands; ++b) {
    Band band;
    if (!std::getline(in, band.name) || band.name.empty()) {
      throw ValidationError(what + ": missing band name");
    }
    band.gsd_m = gsd;
    grid.bands.push_back(std::move(band));
  }
  for (auto& b : grid.bands) {
    b.data.resize(h, w);
    read_f32(in, b.data.data(), static_cast<std::size_t>(h * w), what);
  }
  return grid;
}

RasterGrid density_grid(const Raster<double>& density, double gsd_m) {
  return RasterGrid{{Band{"density", gsd_m, density.cast<float>()}}};
}

RasterGrid mask_grid(const Mask& mask, double gsd_m) {
  return RasterGrid{{Band{"mask", gsd_m, mask.cast<float>()}}};
}

Raster<double> grid_to_density(const RasterGrid& grid) {
  if (grid.band_count() != 1) throw ValidationError("density raster must have exactly one band");
  return grid.bands.front().data.cast<double>();
}

Mask grid_to_mask(const RasterGrid& grid) {
  if (grid.band_count() != 1) throw ValidationError("mask raster must have exactly one band");
  const auto& d = grid.bands.front().data;
  if (((d != 0.0f) && (d != 1.0f)).any()) throw ValidationError("mask raster must be binary");
  return d.cast<std::uint8_t>();
}

void write_annotations(const std::filesystem::path& path, const PointAnnotationSet& annotations) {
  annotations.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << annotations.grid_h << ' ' << annotations.grid_w << '\n' << annotations.points.size() << '\n';
  for (const auto& p : annotations.points) out << p.row << ' ' << p.col << '\n';
}

PointAnnotationSet read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  PointAnnotationSet a;
  long count = -1;
  if (!(in >> a.grid_h >> a.grid_w >> count) || count < 0) {
    throw ValidationError("annotations '" + path.string() + "': malformed header");
  }
  a.points.resize(static_cast<std::size_t>(count));
  for (auto& p : a.points) {
    if (!(in >> p.row >> p.col)) {
      throw ValidationError("annotations '" + path.string() + "': expected " +
                            std::to_string(count) + " points");
    }
  }
  a.validate();
  return a;
}

void write_records(const std::filesystem::path& path, const std::vector<TensorRecord>& records) {
  auto out = open_out(path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  out.put(static_cast<char>(kCheckpointVersion));
  for (const auto& r : records) {
    std::uint64_t expected = 1;
    for (auto d : r.dims) expected *= d;
    if (expected != r.values.size()) {
      throw std::logic_error("tensor record '" + r.name + "' dims do not match its values");
    }
    put_u64(out, r.name.size());
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    put_u64(out, r.dims.size());
    for (auto d : r.dims) put_u64(out, d);
    for (float v : r.values) put_f32(out, v);
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<TensorRecord> read_records(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string what = "checkpoint '" + path.string() + "'";
  char magic[sizeof(kCheckpointMagic) - 1];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ValidationError(what + ": bad magic");
  }
  const int version = in.get();
  if (version != kCheckpointVersion) {
    throw ValidationError(what + ": unsupported version " + std::to_string(version));
  }
  std::vector<TensorRecord> records;
  std::uint64_t name_len = 0;
  while (get_u64(in, name_len)) {
    if (name_len > 4096) throw ValidationError(what + ": implausible record name length");
    TensorRecord r;
    r.name.resize(name_len);
    std::uint64_t rank = 0;
    if (!in.read(r.name.data(), static_cast<std::streamsize>(name_len)) || !get_u64(in, rank) || rank > 8) {
      throw ValidationError(what + ": truncated record header");
    }
    r.dims.resize(rank);
    std::uint64_t count = 1;
    for (auto& d : r.dims) {
      if (!get_u64(in, d)) throw ValidationError(what + ": truncated dims of '" + r.name + "'");
      count *= d;
    }
    if (count > (std::uint64_t{1} << 32)) throw ValidationError(what + ": record '" + r.name + "' too large");
    r.values.resize(count);
    read_f32(in, r.values.data(), count, what);
    records.push_back(std::move(r));
  }
  return records;
}

TensorRecord words_record(std::string name, const std::vector<std::uint32_t>& words) {
  TensorRecord r{std::move(name), {words.size()}, {}};
  r.values.reserve(words.size());
  for (auto w : words) r.values.push_back(std::bit_cast<float>(w));
  return r;
}

std::vector<std::uint32_t> record_words(const TensorRecord& record) {
  std::vector<std::uint32_t> words;
  words.reserve(record.values.size());
  for (float v : record.values) words.push_back(std::bit_cast<std::uint32_t>(v));
  return words;
}

TensorRecord text_record(std::string name, const std::string& text) {
  std::vector<std::uint32_t> words(text.begin(), text.end());
  for (auto& w : words) w &= 0xffu;
  return words_record(std::move(name), words);
}

std::string record_text(const TensorRecord& record) {
  std::string text;
  for (auto w : record_words(record)) text.push_back(static_cast<char>(w));
  return text;
}

}  // namespace spd
