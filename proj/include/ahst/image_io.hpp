// Copyright 2026 The AHST Authors
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

#pragma once

// Image files: 16-bit big-endian binary PGM (P5, maxval 65535) with a JSON sidecar
// `<name>.meta.json`, an optional lossless float64 companion `<name>.f64`, and CSV export.
//
// PGM samples are v = round(pixel / scale). Integer-valued images with peak <= 65535 use
// scale 1 and are stored exactly; anything else uses scale = peak / 65535. The sidecar's
// total_counts is the sum of the stored (quantized) pixels, so the reader recovers the scale
// as total_counts / sum(v).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ahst/error.hpp"
#include "ahst/imaging.hpp"
#include "ahst/kernel_cache.hpp"

namespace ahst {

inline std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  std::filesystem::path p = image_path;
  return p.replace_extension(".meta.json");
}

inline std::filesystem::path lossless_path(const std::filesystem::path& image_path) {
  std::filesystem::path p = image_path;
  return p.replace_extension(".f64");
}

namespace detail {

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("write failed for " + path.string());
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool all_integral_within(const std::vector<double>& v, double limit) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x <= limit && x == std::floor(x); });
}

/// Parses one PGM header token, skipping whitespace and '#' comments.
inline std::string pgm_token(const std::string& data, std::size_t& pos) {
  for (;;) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (pos < data.size() && data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  if (start == pos) throw InvalidInput("pgm: truncated header");
  return data.substr(start, pos - start);
}

inline long pgm_number(const std::string& token) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw InvalidInput("pgm: malformed header field '" + token + "'");
  return std::stol(token);
}

}  // namespace detail

struct PgmData {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::vector<std::uint16_t> samples;
};

inline std::string encode_pgm(const PgmData& pgm) {
  std::string out = "P5\n" + std::to_string(pgm.width) + " " + std::to_string(pgm.height) + "\n" +
                    std::to_string(pgm.maxval) + "\n";
  const bool wide = pgm.maxval > 255;
  for (std::uint16_t v : pgm.samples) {
    if (wide) out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

inline PgmData decode_pgm(const std::string& data) {
  std::size_t pos = 0;
  if (detail::pgm_token(data, pos) != "P5") throw InvalidInput("pgm: not a binary P5 file");
  PgmData pgm;
  pgm.width = static_cast<int>(detail::pgm_number(detail::pgm_token(data, pos)));
  pgm.height = static_cast<int>(detail::pgm_number(detail::pgm_token(data, pos)));
  pgm.maxval = static_cast<int>(detail::pgm_number(detail::pgm_token(data, pos)));
  if (pgm.width <= 0 || pgm.height <= 0) throw InvalidInput("pgm: empty image");
  if (pgm.maxval <= 0 || pgm.maxval > 65535) throw InvalidInput("pgm: maxval out of range");
  if (pos >= data.size()) throw InvalidInput("pgm: truncated header");
  ++pos;  // single whitespace before the raster
  const std::size_t bytes_per = pgm.maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(pgm.width) * static_cast<std::size_t>(pgm.height);
  if (data.size() - pos < count * bytes_per) throw InvalidInput("pgm: truncated raster");
  if (data.size() - pos > count * bytes_per) throw InvalidInput("pgm: trailing bytes after raster");
  pgm.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(data.data() + pos + i * bytes_per);
    pgm.samples[i] = bytes_per == 2 ? static_cast<std::uint16_t>((p[0] << 8) | p[1]) : p[0];
    if (pgm.samples[i] > pgm.maxval) throw InvalidInput("pgm: sample exceeds maxval");
  }
  return pgm;
}

inline nlohmann::json image_metadata(const IntensityImage& image) {
  return {{"sigma_mm", image.geometry.sigma},
          {"pitch_mm", image.geometry.pitch},
          {"n_pixels", image.geometry.n_pixels},
          {"total_counts", image.total_counts},
          {"gouy_rotate_90", image.gouy_rotate_90}};
}

/// Quantizes to the 16-bit representation that write_image stores.
inline IntensityImage quantize_16bit(const IntensityImage& image, std::vector<std::uint16_t>* samples = nullptr) {
  image.validate();
  const double peak = image.pixels.empty() ? 0.0 : *std::max_element(image.pixels.begin(), image.pixels.end());
  const double scale = detail::all_integral_within(image.pixels, 65535.0) ? 1.0 : peak / 65535.0;
  IntensityImage out = image;
  if (samples) samples->resize(image.pixels.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const auto v = scale > 0.0 ? static_cast<std::uint16_t>(std::lround(image.pixels[i] / scale)) : std::uint16_t{0};
    if (samples) (*samples)[i] = v;
    out.pixels[i] = v * scale;
  }
  out.refresh_total();
  return out;
}

/// Writes `<path>` (PGM) and `<name>.meta.json`. Returns the image as stored.
inline IntensityImage write_image(const IntensityImage& image, const std::filesystem::path& path) {
  PgmData pgm{image.geometry.n_pixels, image.geometry.n_pixels, 65535, {}};
  IntensityImage stored = quantize_16bit(image, &pgm.samples);
  detail::write_bytes(path, encode_pgm(pgm));
  detail::write_bytes(sidecar_path(path), image_metadata(stored).dump(2) + "\n");
  return stored;
}

/// Writes the float64 little-endian raster `<name>.f64` next to a PGM.
inline void write_lossless(const IntensityImage& image, const std::filesystem::path& image_path) {
  image.validate();
  std::vector<unsigned char> bytes;
  bytes.reserve(image.pixels.size() * 8);
  for (double v : image.pixels) detail::put_le<double>(bytes, v);
  detail::write_bytes(lossless_path(image_path), std::string(bytes.begin(), bytes.end()));
}

namespace detail {

inline IntensityImage image_from_metadata(const std::filesystem::path& path) {
  const auto meta_path = sidecar_path(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_bytes(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("image metadata " + meta_path.string() + ": " + e.what());
  }
  IntensityImage image;
  try {
    image.geometry.sigma = meta.at("sigma_mm").get<double>();
    image.geometry.pitch = meta.at("pitch_mm").get<double>();
    image.geometry.n_pixels = meta.at("n_pixels").get<int>();
    image.total_counts = meta.at("total_counts").get<double>();
    image.gouy_rotate_90 = meta.value("gouy_rotate_90", false);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("image metadata " + meta_path.string() + ": " + e.what());
  }
  image.geometry.validate();
  return image;
}

}  // namespace detail

/// Reads a PGM and its sidecar.
inline IntensityImage read_image(const std::filesystem::path& path) {
  IntensityImage image = detail::image_from_metadata(path);
  const PgmData pgm = decode_pgm(detail::read_bytes(path));
  if (pgm.width != image.geometry.n_pixels || pgm.height != image.geometry.n_pixels)
    throw InvalidInput("image: PGM dimensions disagree with metadata n_pixels");
  double level_sum = 0.0;
  for (auto v : pgm.samples) level_sum += v;
  const double scale = level_sum > 0.0 ? image.total_counts / level_sum : 0.0;
  if (!std::isfinite(scale) || scale < 0.0) throw InvalidInput("image: inconsistent total_counts");
  image.pixels.resize(pgm.samples.size());
  for (std::size_t i = 0; i < pgm.samples.size(); ++i) image.pixels[i] = pgm.samples[i] * scale;
  image.validate();
  return image;
}

/// Reads `<name>.f64` when present (with the PGM's sidecar for geometry), else the PGM.
inline IntensityImage read_image_best(const std::filesystem::path& path) {
  const auto raw = lossless_path(path);
  if (!std::filesystem::exists(raw)) return read_image(path);
  IntensityImage image = detail::image_from_metadata(path);
  const std::string bytes = detail::read_bytes(raw);
  if (bytes.size() != image.geometry.pixel_count() * 8)
    throw InvalidInput("image: lossless raster size disagrees with metadata n_pixels");
  image.pixels.resize(image.geometry.pixel_count());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) image.pixels[i] = detail::get_le<double>(p + 8 * i);
  image.validate();
  image.refresh_total();
  return image;
}

/// Row-major CSV, one image row per line.
inline void write_image_csv(const IntensityImage& image, const std::filesystem::path& path) {
  std::ostringstream out;
  out << std::setprecision(17);
  const int n = image.geometry.n_pixels;
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      if (col) out << ',';
      out << image.at(row, col);
    }
    out << '\n';
  }
  detail::write_bytes(path, out.str());
}

}  // namespace ahst
