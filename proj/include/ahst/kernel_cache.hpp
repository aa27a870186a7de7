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

// Binary cache for KernelTable.
//
// Layout (little-endian):
//   "AHSTKT01"            8 bytes
//   l_max                 uint64
//   N                     uint64
//   sigma                 float64 (mm)
//   pitch                 float64 (mm)
//   (l_max+1)^2 grids     row-major, each sample two float32 (re, im), pairs ordered (l1, l2)
//
// The cutoff is not stored; samples beyond the loader's r_cut are zeroed.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ahst/error.hpp"
#include "ahst/modes.hpp"

namespace ahst {

namespace detail {

inline constexpr std::array<char, 8> kKernelMagic = {'A', 'H', 'S', 'T', 'K', 'T', '0', '1'};
inline constexpr std::size_t kKernelHeaderBytes = 8 + 4 * 8;

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(in[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace detail

inline void save_kernel_table(const KernelTable& table, const std::filesystem::path& path) {
  const BeamGeometry& g = table.geometry();
  std::vector<unsigned char> bytes(detail::kKernelMagic.begin(), detail::kKernelMagic.end());
  detail::put_le<std::uint64_t>(bytes, static_cast<std::uint64_t>(table.l_max()));
  detail::put_le<std::uint64_t>(bytes, static_cast<std::uint64_t>(g.n_pixels));
  detail::put_le<double>(bytes, g.sigma);
  detail::put_le<double>(bytes, g.pitch);
  bytes.reserve(bytes.size() + table.dim() * table.dim() * g.pixel_count() * 8);
  for (int a = 0; a < table.dim(); ++a) {
    for (int b = 0; b < table.dim(); ++b) {
      for (const Complex& v : table.grid(a, b)) {
        detail::put_le<float>(bytes, static_cast<float>(v.real()));
        detail::put_le<float>(bytes, static_cast<float>(v.imag()));
      }
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("kernel cache: cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("kernel cache: write failed for " + path.string());
}

/// Reads the header only; used to decide whether a cache file matches a run.
inline std::pair<int, BeamGeometry> peek_kernel_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("kernel cache: cannot open " + path.string());
  std::array<unsigned char, detail::kKernelHeaderBytes> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  if (in.gcount() != static_cast<std::streamsize>(head.size()))
    throw InvalidInput("kernel cache: truncated header");
  if (std::memcmp(head.data(), detail::kKernelMagic.data(), 8) != 0)
    throw InvalidInput("kernel cache: bad magic");
  const auto l_max = detail::get_le<std::uint64_t>(head.data() + 8);
  const auto n = detail::get_le<std::uint64_t>(head.data() + 16);
  if (l_max > 64 || n > (1u << 15)) throw InvalidInput("kernel cache: implausible header");
  BeamGeometry g{detail::get_le<double>(head.data() + 24), static_cast<int>(n),
                 detail::get_le<double>(head.data() + 32)};
  g.validate();
  return {static_cast<int>(l_max), g};
}

/// Loads a cached table. r_cut <= 0 selects the default cutoff for the stored l_max.
inline KernelTable load_kernel_table(const std::filesystem::path& path, double r_cut = 0.0) {
  const auto [l_max, g] = peek_kernel_table(path);
  if (r_cut <= 0.0) r_cut = default_r_cut(l_max, g.sigma);
  detail::check_cutoff(g, r_cut);
  const std::size_t dim = static_cast<std::size_t>(l_max) + 1;
  const std::size_t payload = dim * dim * g.pixel_count() * 8;
  if (std::filesystem::file_size(path) != detail::kKernelHeaderBytes + payload)
    throw InvalidInput("kernel cache: payload size does not match header");

  std::ifstream in(path, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(detail::kKernelHeaderBytes));
  std::vector<unsigned char> bytes(payload);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(payload));
  if (in.gcount() != static_cast<std::streamsize>(payload)) throw InvalidInput("kernel cache: truncated payload");

  KernelTable table(l_max, g, r_cut);
  const int n = g.n_pixels;
  const double df = g.fourier_pitch();
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const double fr = std::hypot(g.frequency_index(col) * df, g.frequency_index(row) * df);
      if (fr > r_cut) continue;
      const double big_r = reduced_frequency(fr, g.sigma);
      table.mutable_weight()[static_cast<std::size_t>(row) * n + col] = std::exp(2.0 * big_r * big_r);
    }
  }
  const unsigned char* cursor = bytes.data();
  for (int a = 0; a < table.dim(); ++a) {
    for (int b = 0; b < table.dim(); ++b) {
      auto grid = table.mutable_grid(a, b);
      for (std::size_t k = 0; k < grid.size(); ++k, cursor += 8) {
        if (table.weight()[k] == 0.0) continue;
        grid[k] = Complex(detail::get_le<float>(cursor), detail::get_le<float>(cursor + 4));
      }
    }
  }
  return table;
}

}  // namespace ahst
