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

// Fock-basis Wigner function (hbar = 1) of a density matrix, grid exports, and the
// comparison between the Fourier-plane kernel expansion and the Wigner expansion.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ahst/error.hpp"
#include "ahst/modes.hpp"
#include "ahst/parallel.hpp"
#include "ahst/specfun.hpp"
#include "ahst/states.hpp"

namespace ahst {

inline constexpr double kDefaultWignerExtent = 6.0;
inline constexpr int kDefaultWignerPoints = 201;

/// Square grid over [-extent, extent]^2. values are row-major with rows along p and
/// columns along q: values[j * n + i] = W(q_i, p_j).
struct WignerGrid {
  double extent = kDefaultWignerExtent;
  int n_points = kDefaultWignerPoints;
  std::vector<double> values;
  double imag_residue = 0.0;  // largest |Im| of the double sum before it was discarded

  double step() const { return 2.0 * extent / (n_points - 1); }
  double coordinate(int i) const { return -extent + i * step(); }
  double at(int i_q, int j_p) const { return values[static_cast<std::size_t>(j_p) * n_points + i_q]; }

  double min() const { return *std::min_element(values.begin(), values.end()); }
  double max() const { return *std::max_element(values.begin(), values.end()); }

  /// 2D trapezoid rule.
  double integral() const {
    double sum = 0.0;
    for (int j = 0; j < n_points; ++j) {
      const double wj = (j == 0 || j == n_points - 1) ? 0.5 : 1.0;
      for (int i = 0; i < n_points; ++i) {
        const double wi = (i == 0 || i == n_points - 1) ? 0.5 : 1.0;
        sum += wi * wj * at(i, j);
      }
    }
    return sum * step() * step();
  }
};

namespace detail {

/// Wigner polynomial of |n1><n2| without the 1/pi prefactor and without the phase:
/// (-1)^min sqrt(n1! n2!)/max! e^{-r^2} (sqrt2 r)^m L_min^m(2 r^2).
inline double wigner_radial(int n1, int n2, double r) {
  const int lo = std::min(n1, n2);
  const int m = std::abs(n1 - n2);
  const double sign = (lo % 2 == 0) ? 1.0 : -1.0;
  const double power = m == 0 ? 1.0 : std::pow(std::numbers::sqrt2 * r, m);
  return sign * specfun::factorial_ratio(n1, n2) * power * specfun::laguerre_assoc(lo, m, 2.0 * r * r) *
         std::exp(-r * r);
}

inline void require_physical(const DensityMatrix& rho, const char* where) {
  std::string why;
  if (!DensityMatrix::check_physical(rho.entries(), {}, &why))
    throw InvalidInput(std::string(where) + ": density matrix not physical (" + why + ")");
}

}  // namespace detail

/// W(q, p) and the imaginary residue of the unsymmetrized double sum.
inline std::complex<double> wigner_complex_at(const DensityMatrix& rho, double q, double p) {
  const CMatrix& m = rho.entries();
  const int d = rho.dim();
  const double r = std::hypot(q, p);
  const double phi = std::atan2(p, q);
  std::complex<double> sum{};
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      if (m(a, b) == 0.0) continue;
      sum += m(a, b) * std::polar(detail::wigner_radial(a, b, r), (a - b) * phi);
    }
  return sum / std::numbers::pi;
}

inline double wigner_at(const DensityMatrix& rho, double q, double p) {
  detail::require_physical(rho, "wigner");
  return wigner_complex_at(rho, q, p).real();
}

/// W on a (2 extent / (n-1))-spaced grid; A' = 1/pi, which integrates to one over the plane.
inline WignerGrid wigner(const DensityMatrix& rho, double extent = kDefaultWignerExtent,
                         int n_points = kDefaultWignerPoints) {
  detail::require_physical(rho, "wigner");
  require(std::isfinite(extent) && extent > 0.0, "wigner: extent must be positive");
  require(n_points >= 3, "wigner: need at least 3 points per axis");
  WignerGrid grid{extent, n_points, std::vector<double>(static_cast<std::size_t>(n_points) * n_points), 0.0};
  std::vector<double> residue(static_cast<std::size_t>(n_points), 0.0);
  parallel_for(static_cast<std::size_t>(n_points), [&](std::size_t j) {
    const double p = grid.coordinate(static_cast<int>(j));
    for (int i = 0; i < n_points; ++i) {
      const auto w = wigner_complex_at(rho, grid.coordinate(i), p);
      grid.values[j * n_points + i] = w.real();
      residue[j] = std::max(residue[j], std::abs(w.imag()));
    }
  });
  grid.imag_residue = *std::max_element(residue.begin(), residue.end());
  if (grid.imag_residue > 1e-10) throw InvalidInput("wigner: imaginary residue exceeds 1e-10 (input not Hermitian)");
  for (double v : grid.values)
    if (!std::isfinite(v)) throw InvalidInput("wigner: non-finite value");
  return grid;
}

// ---------------------------------------------------------------------------------------
// Exports

inline void write_wigner_csv(const WignerGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out.precision(12);
  out << "q,p,W\n";
  for (int j = 0; j < grid.n_points; ++j)
    for (int i = 0; i < grid.n_points; ++i)
      out << grid.coordinate(i) << ',' << grid.coordinate(j) << ',' << grid.at(i, j) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

/// Blue (negative) - white (zero) - red (positive), symmetric about zero.
inline std::array<std::uint8_t, 3> diverging_color(double v, double scale) {
  const double t = scale > 0.0 ? std::clamp(v / scale, -1.0, 1.0) : 0.0;
  const auto fade = [](double x) { return static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - x))); };
  if (t >= 0.0) return {255, fade(t), fade(t)};
  return {fade(-t), fade(-t), 255};
}

/// Binary P6 image with p increasing upward, plus a JSON sidecar carrying min/max.
inline void write_wigner_ppm(const WignerGrid& grid, const std::filesystem::path& path) {
  const double lo = grid.min(), hi = grid.max();
  const double scale = std::max(std::abs(lo), std::abs(hi));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << "P6\n" << grid.n_points << ' ' << grid.n_points << "\n255\n";
  for (int j = grid.n_points - 1; j >= 0; --j)
    for (int i = 0; i < grid.n_points; ++i) {
      const auto c = diverging_color(grid.at(i, j), scale);
      out.write(reinterpret_cast<const char*>(c.data()), 3);
    }
  if (!out) throw Error("write failed: " + path.string());

  nlohmann::json meta = {{"min", lo}, {"max", hi}, {"extent", grid.extent}, {"n_points", grid.n_points},
                         {"colormap", "blue-white-red, symmetric about 0, full scale = max|W|"}};
  std::filesystem::path side = path;
  side += ".json";
  std::ofstream js(side);
  js << meta.dump(2) << '\n';
  if (!js) throw Error("write failed: " + side.string());
}

// ---------------------------------------------------------------------------------------
// Fourier-plane vs. phase-space expansion

/// Elementwise factor c with P_{l1,l2}(R, phi_f) e^{R^2} = c * pi * W_{l1,l2}(r' = R, phi' = -phi_f),
/// where W_{l1,l2} is the Wigner function of |l1><l2|: c = (-i)^{|dl|} (-1)^{min}.
inline Complex fourier_wigner_factor(int l1, int l2) {
  const int lo = std::min(l1, l2);
  return detail::minus_i_power(std::abs(l1 - l2)) * ((lo % 2 == 0) ? 1.0 : -1.0);
}

struct FourierWignerDiagnostic {
  CMatrix factor;              // fourier_wigner_factor per element
  double scale_unit_error;     // max relative mismatch with r' = R
  double scale_sqrt2_error;    // max relative mismatch with r' = sqrt2 R
  double best_scale;           // the scaling with the smaller mismatch
};

/// Samples both expansions on R in (0, r_max], several azimuths, and measures how well
/// P e^{R^2} / (c pi) matches W(r' = s R) for s = 1 and s = sqrt2.
inline FourierWignerDiagnostic fourier_wigner_diagnostic(int l_max, double r_max = 3.0, int samples = 60) {
  require(l_max >= 0, "diagnostic: negative l_max");
  require(r_max > 0.0 && samples >= 1, "diagnostic: bad sampling");
  const int d = l_max + 1;
  const double sigma = 1.0;
  FourierWignerDiagnostic out{CMatrix(d, d), 0.0, 0.0, 1.0};
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) out.factor(a, b) = fourier_wigner_factor(a, b);

  const double phis[] = {0.0, 0.7, 2.1, -2.8};
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int k = 1; k <= samples; ++k) {
        const double big_r = r_max * k / samples;
        const double f_r = 2.0 * big_r / (std::numbers::pi * sigma);
        for (double phi : phis) {
          const Complex lhs = kernel_p(a, b, f_r, phi, sigma) * std::exp(big_r * big_r) / out.factor(a, b);
          for (int which = 0; which < 2; ++which) {
            const double rp = which == 0 ? big_r : std::numbers::sqrt2 * big_r;
            const Complex w = std::polar(detail::wigner_radial(a, b, rp), (a - b) * (-phi));
            const double denom = std::max({std::abs(lhs), std::abs(w), 1e-300});
            const double err = std::abs(lhs - w) / denom;
            double& slot = which == 0 ? out.scale_unit_error : out.scale_sqrt2_error;
            if (std::abs(lhs) > 1e-12 || std::abs(w) > 1e-12) slot = std::max(slot, err);
          }
        }
      }
  out.best_scale = out.scale_unit_error <= out.scale_sqrt2_error ? 1.0 : std::numbers::sqrt2;
  return out;
}

}  // namespace ahst
