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

// Forward model: beam-waist intensity images of OAM density matrices and a detector
// noise model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "ahst/error.hpp"
#include "ahst/modes.hpp"
#include "ahst/parallel.hpp"
#include "ahst/states.hpp"

namespace ahst {

/// N x N nonnegative samples, row-major, row index along y.
struct IntensityImage {
  BeamGeometry geometry;
  std::vector<double> pixels;
  double total_counts = 0.0;
  /// Set when the grid holds a far-field frame that must be turned a quarter turn before
  /// reconstruction.
  bool gouy_rotate_90 = false;

  double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * geometry.n_pixels + col]; }
  double at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * geometry.n_pixels + col];
  }

  void refresh_total() {
    total_counts = 0.0;
    for (double v : pixels) total_counts += v;
  }

  void validate() const {
    geometry.validate();
    if (pixels.size() != geometry.pixel_count())
      throw GeometryMismatch("image: pixel array does not match geometry");
    for (double v : pixels)
      if (!std::isfinite(v) || v < 0.0) throw InvalidInput("image: pixels must be finite and nonnegative");
  }
};

/// Detector model. photon_budget = +inf disables shot noise.
struct NoiseModel {
  double photon_budget = std::numeric_limits<double>::infinity();
  double dark_level = 0.0;
  int bit_depth = 0;
  double waist_error = 0.0;

  bool is_identity() const { return std::isinf(photon_budget) && dark_level == 0.0 && bit_depth == 0; }

  void validate() const {
    require(photon_budget > 0.0, "noise: photon_budget must be positive");
    require(std::isfinite(dark_level) && dark_level >= 0.0, "noise: dark_level must be nonnegative");
    require(bit_depth >= 0 && bit_depth <= 16, "noise: bit_depth must lie in [0, 16]");
    require(std::isfinite(waist_error) && waist_error > -1.0, "noise: waist_error must exceed -1");
  }
};

/// Fraction of |l>'s energy outside radius r: Gamma(l+1, 2r^2/sigma^2)/l!.
inline double mode_tail_fraction(int l, double r, double sigma) {
  const double x = 2.0 * r * r / (sigma * sigma);
  double term = std::exp(-x);
  double sum = term;
  for (int k = 1; k <= l; ++k) {
    term *= x / k;
    sum += term;
  }
  return std::min(1.0, sum);
}

/// Largest dimension d whose top mode |d-1> keeps its out-of-window energy below 1e-4.
inline int supported_dimension(const BeamGeometry& geometry) {
  int d = 0;
  while (d < 512 && mode_tail_fraction(d, geometry.half_width(), geometry.sigma) <= 1e-4) ++d;
  return d;
}

/// Intensity scale A: the brightest pixel of the |0> image equals 1.
inline double intensity_scale(const BeamGeometry& geometry) {
  const double half = 0.5 * geometry.pitch;
  const double r2 = 2.0 * half * half;
  const double s2 = geometry.sigma * geometry.sigma;
  return 1.0 / (2.0 / (std::numbers::pi * s2) * std::exp(-2.0 * r2 / s2));
}

/// Psi_0..Psi_{d-1} at (x, y), by the ratio Psi_l / Psi_{l-1} = sqrt2 r e^{-i phi} / (sigma sqrt l).
inline void mode_amplitudes(double x, double y, double sigma, std::vector<Complex>& out) {
  const double r = std::hypot(x, y);
  const double phi = std::atan2(y, x);
  out[0] = Complex(std::sqrt(2.0 / std::numbers::pi) / sigma * std::exp(-r * r / (sigma * sigma)), 0.0);
  const Complex step = std::polar(std::numbers::sqrt2 * r / sigma, -phi);
  for (std::size_t l = 1; l < out.size(); ++l) out[l] = out[l - 1] * step / std::sqrt(static_cast<double>(l));
}

/// Un-normalized intensity <r,phi|rho|r,phi> at a point (no scale factor, no clamping).
inline double intensity_at(const DensityMatrix& rho, double x, double y, double sigma) {
  std::vector<Complex> psi(static_cast<std::size_t>(rho.dim()));
  mode_amplitudes(x, y, sigma, psi);
  const CMatrix& m = rho.entries();
  double value = 0.0;
  for (int a = 0; a < rho.dim(); ++a) {
    Complex row{};
    for (int b = 0; b < rho.dim(); ++b) row += m(a, b) * std::conj(psi[b]);
    value += (psi[a] * row).real();
  }
  return value;
}

/// I(pixel) = A sum_{l1,l2} Psi_{l1} Psi_{l2}^* rho_{l1,l2} at pixel centers, clamped at 0.
inline IntensityImage intensity_image(const DensityMatrix& rho, const BeamGeometry& geometry) {
  geometry.validate();
  require(rho.dim() >= 1, "intensity_image: empty density matrix");
  if (rho.dim() > supported_dimension(geometry))
    throw InvalidInput("intensity_image: dimension exceeds geometry support (window too small)");
  const int n = geometry.n_pixels;
  const double scale = intensity_scale(geometry);
  IntensityImage image{geometry, std::vector<double>(geometry.pixel_count(), 0.0)};
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    const double y = geometry.coordinate(static_cast<int>(row));
    for (int col = 0; col < n; ++col) {
      const double value = intensity_at(rho, geometry.coordinate(col), y, geometry.sigma);
      image.at(static_cast<int>(row), col) = value > 0.0 ? scale * value : 0.0;
    }
  });
  image.refresh_total();
  return image;
}

/// Quarter turn counter-clockwise in (x, y): out(x, y) = in(y, -x).
inline IntensityImage rotate_quarter(const IntensityImage& in) {
  const int n = in.geometry.n_pixels;
  IntensityImage out = in;
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) out.at(row, col) = in.at(n - 1 - col, row);
  return out;
}

/// Far-field frame as recorded behind a Fourier lens: the lens adds e^{-i l pi/2}, which
/// turns the waist image by -90 degrees.
inline IntensityImage far_field_image(const DensityMatrix& rho, const BeamGeometry& geometry) {
  IntensityImage image = intensity_image(rotate_phase(rho, -std::numbers::pi / 2.0), geometry);
  image.gouy_rotate_90 = true;
  return image;
}

/// Scales to the photon budget, draws Poisson counts plus Poisson dark counts, then quantizes
/// to bit_depth levels of the brightest pixel. The identity model returns the input.
inline IntensityImage apply_noise(const IntensityImage& image, const NoiseModel& model, std::uint64_t seed) {
  model.validate();
  image.validate();
  IntensityImage out = image;
  if (model.is_identity()) return out;
  std::mt19937_64 gen(seed);
  if (std::isfinite(model.photon_budget)) {
    double sum = 0.0;
    for (double v : image.pixels) sum += v;
    if (sum <= 0.0) throw DegenerateData("apply_noise: image has no intensity to scale");
    const double per_unit = model.photon_budget / sum;
    for (double& v : out.pixels) {
      const double mean = v * per_unit;
      double counts = mean > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(mean)(gen)) : 0.0;
      if (model.dark_level > 0.0)
        counts += static_cast<double>(std::poisson_distribution<long long>(model.dark_level)(gen));
      v = counts;
    }
  } else if (model.dark_level > 0.0) {
    for (double& v : out.pixels) v += model.dark_level;
  }
  if (model.bit_depth > 0) {
    const double levels = std::ldexp(1.0, model.bit_depth) - 1.0;
    const double peak = *std::max_element(out.pixels.begin(), out.pixels.end());
    if (peak > 0.0) {
      const double step = peak / levels;
      for (double& v : out.pixels) v = std::min(levels, std::round(v / step)) * step;
    }
  }
  out.refresh_total();
  return out;
}

/// Sum of pixel values times pixel area, divided by A: the captured fraction of trace(rho).
inline double window_capture(const IntensityImage& image) {
  return image.total_counts * image.geometry.pitch * image.geometry.pitch / intensity_scale(image.geometry);
}

}  // namespace ahst
