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

#include "ahst/wigner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "gtest/gtest.h"
#include "oracles.hpp"

using namespace ahst;

namespace {

constexpr double kPi = std::numbers::pi;

DensityMatrix fock(int l, int d = 13) { return DensityMatrix::projector(eigenstate(l, d)); }

/// Largest deviation from the azimuthal mean, over rings of the grid.
double fringe_amplitude(const DensityMatrix& rho) {
  double worst = 0;
  for (double r = 0.25; r <= 5.0; r += 0.25) {
    double mean = 0;
    std::vector<double> v;
    for (int k = 0; k < 96; ++k) {
      const double phi = 2 * kPi * k / 96;
      v.push_back(wigner_at(rho, r * std::cos(phi), r * std::sin(phi)));
      mean += v.back() / 96;
    }
    for (double x : v) worst = std::max(worst, std::abs(x - mean));
  }
  return worst;
}

}  // namespace

TEST(wigner, vacuum_value_and_shape) {
  const WignerGrid w = wigner(fock(0));
  EXPECT_NEAR(w.at(100, 100), 1 / kPi, 1e-14);
  EXPECT_NEAR(w.at(120, 100), w.at(100, 120), 1e-15);
  EXPECT_NEAR(w.at(120, 100), std::exp(-std::pow(w.coordinate(120), 2)) / kPi, 1e-15);
}

TEST(wigner, fock_states_closed_form) {
  // W_n(r) = (-1)^n / pi e^{-r^2} L_n(2 r^2).
  for (int n = 0; n <= 12; ++n)
    for (double r : {0.0, 0.7, 1.9, 3.3}) {
      const double want = ((n % 2) ? -1 : 1) / kPi * std::exp(-r * r) * oracle::laguerre_series(n, 0, 2 * r * r);
      EXPECT_NEAR(wigner_at(fock(n), r * 0.6, r * 0.8), want, 1e-12) << n;
    }
  EXPECT_LT(wigner_at(fock(1), 0, 0), 0.0);
}

TEST(wigner, off_diagonal_closed_form) {
  // (|0> + |1>)/sqrt2: W = e^{-r^2}/pi (1/2 - (1 - 2r^2)/2 + sqrt2 q).
  const PureState plus = superposition({1.0, 1.0}, 2);
  const DensityMatrix rho = DensityMatrix::projector(plus);
  const double q = 0.8, p = -0.3;
  const double r2 = q * q + p * p;
  const double want = (1 / kPi) * std::exp(-r2) * (0.5 - 0.5 * (1 - 2 * r2) + std::sqrt(2.0) * q);
  EXPECT_NEAR(wigner_at(rho, q, p), want, 1e-14);
}

TEST(wigner, normalization_over_grid) {
  for (const auto& rho : {fock(0), fock(5), fock(12), DensityMatrix::projector(even_cat()), rho_m1(), rho_m2(),
                          DensityMatrix::projector(squeezed()), random_density(13, 3, 4)}) {
    const WignerGrid w = wigner(rho);
    EXPECT_NEAR(w.integral(), 1.0, 1e-2);
    EXPECT_LE(w.imag_residue, 1e-10);
  }
}

TEST(wigner, cat_has_negative_fringes) {
  const WignerGrid w = wigner(DensityMatrix::projector(even_cat()));
  EXPECT_LT(w.min(), 0.0);
}

TEST(wigner, rotation_covariance) {
  // The phase e^{i theta l} turns W(r, phi) into W(r, phi + theta).
  const DensityMatrix g = DensityMatrix::projector(psi_g());
  const double theta = kPi / 6;
  const DensityMatrix rg = rotate_phase(g, theta);
  double worst = 0;
  for (double r = 0.2; r < 4; r += 0.3)
    for (double phi = 0; phi < 2 * kPi; phi += 0.37) {
      const double a = wigner_at(rg, r * std::cos(phi), r * std::sin(phi));
      const double b = wigner_at(g, r * std::cos(phi + theta), r * std::sin(phi + theta));
      worst = std::max(worst, std::abs(a - b));
    }
  EXPECT_LT(worst, 1e-12);
}

TEST(wigner, squeezed_is_narrower_along_one_axis) {
  auto fwhm_along = [](const DensityMatrix& rho, double angle) {
    const double peak = wigner_at(rho, 0, 0);
    double r = 0;
    while (wigner_at(rho, r * std::cos(angle), r * std::sin(angle)) > peak / 2) r += 1e-3;
    return 2 * r;
  };
  const DensityMatrix sq = DensityMatrix::projector(squeezed());
  const double vac = fwhm_along(fock(0), 0);
  const double narrow = std::min(fwhm_along(sq, 0), fwhm_along(sq, kPi / 2));
  EXPECT_LT(narrow, vac);
}

TEST(wigner, mixture_has_no_fringes) {
  const double peak_m1 = std::abs(wigner(rho_m1()).max());
  EXPECT_LT(fringe_amplitude(rho_m1()), 0.1 * peak_m1);
  EXPECT_LT(fringe_amplitude(rho_m1()), 1e-12);
  const double peak_g = std::abs(wigner(DensityMatrix::projector(psi_g())).max());
  EXPECT_GT(fringe_amplitude(DensityMatrix::projector(psi_g())), 0.1 * peak_g);
}

TEST(wigner, rejects_non_physical) {
  CMatrix neg(2, 2);
  neg << 1.2, 0, 0, -0.2;
  EXPECT_THROW(wigner(DensityMatrix::raw(neg)), InvalidInput);
  EXPECT_THROW(wigner(fock(0), -1.0), InvalidInput);
  EXPECT_THROW(wigner(fock(0), 6.0, 2), InvalidInput);
}

TEST(wigner, exports) {
  const auto dir = std::filesystem::temp_directory_path() / "ahst_wigner_test";
  std::filesystem::create_directories(dir);
  const WignerGrid w = wigner(fock(1), 3.0, 21);
  write_wigner_csv(w, dir / "w.csv");
  write_wigner_ppm(w, dir / "w.ppm");
  std::ifstream csv(dir / "w.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 1 + 21 * 21);
  EXPECT_EQ(std::filesystem::file_size(dir / "w.ppm"), std::string("P6\n21 21\n255\n").size() + 21 * 21 * 3);
  const auto meta = nlohmann::json::parse(std::ifstream(dir / "w.ppm.json"));
  EXPECT_DOUBLE_EQ(meta["min"].get<double>(), w.min());
  EXPECT_EQ(diverging_color(0.0, 1.0), (std::array<std::uint8_t, 3>{255, 255, 255}));
  EXPECT_EQ(diverging_color(-1.0, 1.0), (std::array<std::uint8_t, 3>{0, 0, 255}));
  EXPECT_EQ(diverging_color(2.0, 1.0), (std::array<std::uint8_t, 3>{255, 0, 0}));
  std::filesystem::remove_all(dir);
}

TEST(fourier_wigner, factor_and_scaling) {
  EXPECT_EQ(fourier_wigner_factor(0, 0), Complex(1, 0));
  EXPECT_EQ(fourier_wigner_factor(1, 1), Complex(-1, 0));
  EXPECT_EQ(fourier_wigner_factor(0, 1), Complex(0, -1));
  EXPECT_EQ(fourier_wigner_factor(3, 1), Complex(1, 0));  // (-i)^2 (-1)^1
  const FourierWignerDiagnostic d = fourier_wigner_diagnostic(12);
  EXPECT_LT(d.scale_unit_error, 1e-10);
  EXPECT_GT(d.scale_sqrt2_error, 0.1);
  EXPECT_EQ(d.best_scale, 1.0);
}
