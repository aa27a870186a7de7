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

// Laguerre-Gaussian (p = 0) mode amplitudes and the analytic Fourier kernels of their
// pairwise products.
//
// Fourier convention: F[g](f) = \int g(x) exp(-i 2 pi f.x) d^2x with f in cycles/mm.
// With R = pi sigma f_r / 2 the transform of Psi_{l1} Psi_{l2}^* is
//
//   P_{l1,l2} = (-i)^{|dl|} sqrt(l1! l2!)/max! exp(-2R^2) (sqrt2 R)^{|dl|}
//               L_{min(l1,l2)}^{|dl|}(2R^2) exp(-i (l1 - l2) phi_f),   dl = l1 - l2.
//
// The kernels are orthogonal under the weight exp(+2R^2) = exp(pi^2 sigma^2 f_r^2 / 2):
//   \int P_{l1,l2} P_{l1',l2'}^* exp(2R^2) C d^2f = delta delta,   C = pi sigma^2 / 2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "ahst/error.hpp"
#include "ahst/parallel.hpp"
#include "ahst/specfun.hpp"

namespace ahst {

using Complex = std::complex<double>;

inline constexpr int kDefaultLMax = 12;
inline constexpr double kDefaultSigmaMm = 0.114;
inline constexpr int kDefaultPixels = 256;
inline constexpr double kDefaultWindowSigmas = 12.0;

/// Square sampling grid at the beam waist.
///
/// Pixel m sits at x_m = (m - (N-1)/2) * pitch, so the beam axis falls between the four
/// central pixels. Row index runs along y, column index along x. Frequency sample i
/// carries index p = i - N/2 + 1 in [-N/2+1, N/2], i.e. f = p * fourier_pitch().
struct BeamGeometry {
  double sigma = kDefaultSigmaMm;  // beam waist (mm)
  int n_pixels = kDefaultPixels;   // grid side N
  double pitch = kDefaultWindowSigmas * kDefaultSigmaMm / kDefaultPixels;  // mm

  static BeamGeometry with_window(double sigma, int n_pixels, double window_sigmas) {
    BeamGeometry g{sigma, n_pixels, window_sigmas * sigma / n_pixels};
    g.validate();
    return g;
  }

  double fourier_pitch() const { return 1.0 / (n_pixels * pitch); }
  double half_width() const { return 0.5 * n_pixels * pitch; }
  double coordinate(int index) const { return (index - 0.5 * (n_pixels - 1)) * pitch; }
  int frequency_index(int index) const { return index - n_pixels / 2 + 1; }
  /// Array position of the zero-frequency sample.
  int zero_frequency_position() const { return n_pixels / 2 - 1; }
  /// Largest radial frequency fully contained in the sampled Fourier window.
  double max_radial_frequency() const { return (n_pixels / 2 - 1) * fourier_pitch(); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(n_pixels) * static_cast<std::size_t>(n_pixels);
  }

  void validate() const {
    require(std::isfinite(sigma) && sigma > 0.0, "geometry: sigma must be positive");
    require(std::isfinite(pitch) && pitch > 0.0, "geometry: pitch must be positive");
    require(n_pixels >= 64 && n_pixels % 2 == 0, "geometry: N must be an even integer >= 64");
    require(half_width() >= 5.0 * sigma * (1.0 - 1e-12),
            "geometry: real-space half-width must be at least 5 sigma");
  }

  bool operator==(const BeamGeometry&) const = default;
};

/// Dimensionless radial frequency R = pi sigma f_r / 2.
inline double reduced_frequency(double f_r, double sigma) {
  return std::numbers::pi * sigma * f_r / 2.0;
}

/// Psi_l(r, phi) = sqrt(2/(pi l!)) / sigma (sqrt2 r/sigma)^l exp(-r^2/sigma^2) exp(-i l phi).
inline Complex lg_amplitude(int l, double r, double phi, double sigma) {
  require(l >= 0, "lg_amplitude: negative mode index");
  require(r >= 0.0 && sigma > 0.0, "lg_amplitude: need r >= 0 and sigma > 0");
  const double radial_sq = r * r / (sigma * sigma);
  double magnitude;
  if (l == 0) {
    magnitude = std::exp(-radial_sq);
  } else if (r == 0.0) {
    return {0.0, 0.0};
  } else {
    magnitude = std::exp(l * std::log(std::numbers::sqrt2 * r / sigma) -
                         0.5 * specfun::log_factorial(l) - radial_sq);
  }
  magnitude *= std::sqrt(2.0 / std::numbers::pi) / sigma;
  return std::polar(magnitude, -l * phi);
}

namespace detail {

/// (-i)^m for m >= 0.
inline Complex minus_i_power(int m) {
  switch (m % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, -1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, 1.0};
  }
}

/// Radial factor sqrt(l1! l2!)/max! (sqrt2 R)^m L_min^m(2R^2) without the Gaussian.
inline double kernel_radial_polynomial(int l1, int l2, double big_r) {
  const int m = std::abs(l1 - l2);
  const int lo = std::min(l1, l2);
  const double power = m == 0 ? 1.0 : std::pow(std::numbers::sqrt2 * big_r, m);
  return specfun::factorial_ratio(l1, l2) * power *
         specfun::laguerre_assoc(lo, m, 2.0 * big_r * big_r);
}

}  // namespace detail

/// Analytic Fourier transform of Psi_{l1} Psi_{l2}^* at polar frequency (f_r, f_phi).
inline Complex kernel_p(int l1, int l2, double f_r, double f_phi, double sigma) {
  require(l1 >= 0 && l2 >= 0, "kernel_p: negative mode index");
  require(f_r >= 0.0, "kernel_p: negative radial frequency");
  const double big_r = reduced_frequency(f_r, sigma);
  const double radial =
      detail::kernel_radial_polynomial(l1, l2, big_r) * std::exp(-2.0 * big_r * big_r);
  return detail::minus_i_power(std::abs(l1 - l2)) * std::polar(radial, -(l1 - l2) * f_phi);
}

/// Normalization making the weighted kernel inner product unity. Laguerre orthogonality
/// with degree min(l1,l2) and order |dl| gives (max!/min!) * (min! max!/max!^2) = 1 for the
/// radial integral in x = 2R^2, leaving the same constant for every pair.
inline double norm_constant(int l1, int l2, double sigma) {
  require(l1 >= 0 && l2 >= 0, "norm_constant: negative mode index");
  require(sigma > 0.0, "norm_constant: sigma must be positive");
  return std::numbers::pi * sigma * sigma / 2.0;
}

/// Worst-case fraction of the weighted kernel norm lying beyond x_cut = 2R_cut^2, over all
/// pairs with indices <= l_max:
///   max_{a+m<=l_max} a!/(a+m)! \int_{x_cut}^inf x^m e^{-x} [L_a^m(x)]^2 dx.
/// Returned as a table over x in [0, x_max] with spacing dx, by backward cumulative
/// trapezoid integration.
inline std::vector<double> orthogonality_tail_profile(int l_max, double dx, double x_max) {
  const auto samples = static_cast<std::size_t>(std::ceil(x_max / dx)) + 1;
  std::vector<double> worst(samples, 0.0);
  std::vector<double> tail(samples);
  for (int m = 0; m <= l_max; ++m) {
    for (int a = 0; a + m <= l_max; ++a) {
      const double log_norm = specfun::log_factorial(a) - specfun::log_factorial(a + m);
      auto integrand = [&](double x) {
        if (x <= 0.0) return m == 0 ? std::exp(log_norm) : 0.0;
        const double lag = specfun::laguerre_assoc(a, m, x);
        return std::exp(m * std::log(x) - x + log_norm) * lag * lag;
      };
      tail[samples - 1] = 0.0;
      double right = integrand((samples - 1) * dx);
      for (std::size_t k = samples - 1; k-- > 0;) {
        const double left = integrand(k * dx);
        tail[k] = tail[k + 1] + 0.5 * dx * (left + right);
        right = left;
      }
      for (std::size_t k = 0; k < samples; ++k) worst[k] = std::max(worst[k], tail[k]);
    }
  }
  return worst;
}

/// Default radial cutoff in reduced units: the smallest R (0.01 steps) at which every kernel
/// pair keeps at most `tolerance` of its weighted norm outside the cutoff disk.
inline double default_reduced_cutoff(int l_max, double tolerance = 1e-6) {
  require(l_max >= 0, "default_reduced_cutoff: negative l_max");
  constexpr double kStep = 0.01;
  const double x_max = 8.0 * l_max + 120.0;
  const auto profile = orthogonality_tail_profile(l_max, kStep / 4.0, x_max);
  for (int i = 1;; ++i) {
    const double big_r = i * kStep;
    const double x = 2.0 * big_r * big_r;
    const auto k = static_cast<std::size_t>(std::ceil(x / (kStep / 4.0)));
    if (k >= profile.size()) return big_r;
    if (profile[k] <= tolerance) return big_r;
  }
}

/// Radial cutoff in cycles/mm: r_cut = 2 R_cut / (pi sigma).
inline double default_r_cut(int l_max, double sigma) {
  return 2.0 * default_reduced_cutoff(l_max) / (std::numbers::pi * sigma);
}

/// Precomputed kernel samples on the centered Fourier grid. Immutable once built.
class KernelTable {
 public:
  KernelTable(int l_max, BeamGeometry geometry, double r_cut)
      : l_max_(l_max), geometry_(geometry), r_cut_(r_cut) {
    const auto pairs = static_cast<std::size_t>(dim() * dim());
    samples_.assign(pairs * geometry_.pixel_count(), Complex{});
    weight_.assign(geometry_.pixel_count(), 0.0);
    constants_.resize(pairs);
    for (int a = 0; a < dim(); ++a)
      for (int b = 0; b < dim(); ++b) constants_[pair_index(a, b)] = norm_constant(a, b, geometry_.sigma);
  }

  int l_max() const { return l_max_; }
  int dim() const { return l_max_ + 1; }
  const BeamGeometry& geometry() const { return geometry_; }
  double r_cut() const { return r_cut_; }
  double reduced_cutoff() const { return reduced_frequency(r_cut_, geometry_.sigma); }

  double constant(int l1, int l2) const { return constants_[pair_index(l1, l2)]; }

  /// Row-major N x N samples of P_{l1,l2}; exact zero beyond r_cut.
  std::span<const Complex> grid(int l1, int l2) const {
    return {samples_.data() + pair_index(l1, l2) * geometry_.pixel_count(), geometry_.pixel_count()};
  }
  std::span<Complex> mutable_grid(int l1, int l2) {
    return {samples_.data() + pair_index(l1, l2) * geometry_.pixel_count(), geometry_.pixel_count()};
  }
  Complex at(int l1, int l2, int row, int col) const {
    return grid(l1, l2)[static_cast<std::size_t>(row) * geometry_.n_pixels + col];
  }

  /// exp(+2R^2) inside the cutoff disk, zero outside.
  std::span<const double> weight() const { return weight_; }
  std::span<double> mutable_weight() { return weight_; }

 private:
  std::size_t pair_index(int l1, int l2) const {
    if (l1 < 0 || l2 < 0 || l1 > l_max_ || l2 > l_max_)
      throw InvalidInput("kernel table: mode index out of range");
    return static_cast<std::size_t>(l1) * dim() + l2;
  }

  int l_max_;
  BeamGeometry geometry_;
  double r_cut_;
  std::vector<Complex> samples_;
  std::vector<double> weight_;
  std::vector<double> constants_;
};

namespace detail {

inline void check_cutoff(const BeamGeometry& geometry, double r_cut) {
  require(std::isfinite(r_cut) && r_cut > 0.0, "kernel table: r_cut must be positive");
  const double big_r = reduced_frequency(r_cut, geometry.sigma);
  require(2.0 * big_r * big_r < 700.0, "kernel table: r_cut overflows the exp(2R^2) weight");
  if (r_cut > geometry.max_radial_frequency())
    throw GeometryMismatch("kernel table: Fourier window does not contain r_cut; "
                           "increase resolution (smaller pitch)");
}

/// Fills one frequency row of the weight grid and of every kernel grid.
inline void fill_table_row(KernelTable& table, int row) {
  const BeamGeometry& g = table.geometry();
  const int n = g.n_pixels;
  const int dim = table.dim();
  const double df = g.fourier_pitch();
  const double fy = g.frequency_index(row) * df;
  std::vector<double> lag(static_cast<std::size_t>(dim) * dim);
  for (int col = 0; col < n; ++col) {
    const double fx = g.frequency_index(col) * df;
    const double fr = std::hypot(fx, fy);
    if (fr > table.r_cut()) continue;
    const double phi = std::atan2(fy, fx);
    const double big_r = reduced_frequency(fr, g.sigma);
    const double x = 2.0 * big_r * big_r;
    const double gauss = std::exp(-x);
    const std::size_t pixel = static_cast<std::size_t>(row) * n + col;
    table.mutable_weight()[pixel] = std::exp(x);
    // lag[m*dim + a] = L_a^m(x), by recurrence in a for each order m.
    for (int m = 0; m < dim; ++m) {
      double* out = lag.data() + static_cast<std::size_t>(m) * dim;
      out[0] = 1.0;
      if (dim - m > 1) out[1] = 1.0 + m - x;
      for (int a = 1; a + 1 < dim - m; ++a)
        out[a + 1] = ((2.0 * a + 1.0 + m - x) * out[a] - (a + m) * out[a - 1]) / (a + 1.0);
    }
    for (int l1 = 0; l1 < dim; ++l1) {
      for (int l2 = 0; l2 < dim; ++l2) {
        const int m = std::abs(l1 - l2);
        const int lo = std::min(l1, l2);
        const double power = m == 0 ? 1.0 : std::pow(std::numbers::sqrt2 * big_r, m);
        const double radial = specfun::factorial_ratio(l1, l2) * power *
                              lag[static_cast<std::size_t>(m) * dim + lo] * gauss;
        table.mutable_grid(l1, l2)[pixel] =
            minus_i_power(m) * std::polar(radial, -(l1 - l2) * phi);
      }
    }
  }
}

}  // namespace detail

/// Builds the kernel table for modes 0..l_max on the geometry's centered frequency grid.
/// r_cut <= 0 selects default_r_cut(l_max, sigma).
inline KernelTable build_kernel_table(const BeamGeometry& geometry, int l_max, double r_cut = 0.0) {
  geometry.validate();
  require(l_max >= 0, "build_kernel_table: negative l_max");
  if (r_cut <= 0.0) r_cut = default_r_cut(l_max, geometry.sigma);
  detail::check_cutoff(geometry, r_cut);
  KernelTable table(l_max, geometry, r_cut);
  parallel_for(static_cast<std::size_t>(geometry.n_pixels),
               [&](std::size_t row) { detail::fill_table_row(table, static_cast<int>(row)); });
  return table;
}

}  // namespace ahst
