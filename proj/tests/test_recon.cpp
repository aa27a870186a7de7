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

#include "ahst/recon.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ahst/rng.hpp"
#include "gtest/gtest.h"

using namespace ahst;

namespace {

constexpr double kPi = std::numbers::pi;

const KernelTable& default_table() {
  static const KernelTable table = build_kernel_table(BeamGeometry{}, kDefaultLMax);
  return table;
}

DensityMatrix perturbed(int d, std::uint64_t seed, double amount) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, amount);
  CMatrix m = random_density(d, 1 + static_cast<int>(seed % d), seed).entries();
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) m(a, b) += Complex(n(gen), n(gen));
  return DensityMatrix::raw(m);
}

double cost_of(const CMatrix& rho, const CMatrix& raw) {
  const CMatrix target = raw / raw.trace().real();
  return (rho - target).squaredNorm();
}

/// Exact minimizer of |rho - H|_F over unit-trace PSD matrices: shift the eigenvalues of the
/// Hermitian part onto the probability simplex.
CMatrix simplex_projection(const CMatrix& raw) {
  const CMatrix h0 = raw / raw.trace().real();
  const CMatrix h = 0.5 * (h0 + h0.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  std::vector<double> v(eig.eigenvalues().data(), eig.eigenvalues().data() + h.rows());
  std::vector<double> sorted = v;
  std::sort(sorted.rbegin(), sorted.rend());
  double cum = 0, tau = 0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cum += sorted[k];
    const double t = (cum - 1.0) / (k + 1.0);
    if (sorted[k] - t > 0) tau = t;
  }
  Eigen::VectorXd w(h.rows());
  for (int k = 0; k < h.rows(); ++k) w(k) = std::max(0.0, v[k] - tau);
  return eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace

TEST(dft2, gaussian_matches_continuous_transform) {
  // |Psi_0|^2 scaled by A has transform A exp(-pi^2 sigma^2 f^2 / 2).
  const BeamGeometry g;
  const IntensityImage img = intensity_image(DensityMatrix::projector(eigenstate(0, 1)), g);
  const FourierImage f = dft2(img);
  const double a = intensity_scale(g);
  const double df = g.fourier_pitch();
  for (int p : {0, 1, 5, -7, 20})
    for (int q : {0, 3, -11}) {
      const double fr2 = (p * p + q * q) * df * df;
      const Complex want = a * std::exp(-kPi * kPi * g.sigma * g.sigma * fr2 / 2);
      EXPECT_NEAR(std::abs(f.at_frequency(p, q) - want), 0.0, 1e-12 * a) << p << "," << q;
    }
}

TEST(dft2, shift_gives_linear_phase) {
  // A single bright pixel at column c contributes exp(-i 2 pi f x_c) dx^2.
  const BeamGeometry g = BeamGeometry::with_window(0.114, 64, 12);
  IntensityImage img{g, std::vector<double>(g.pixel_count(), 0.0)};
  img.at(20, 40) = 1.0;
  img.refresh_total();
  const FourierImage f = dft2(img);
  const double df = g.fourier_pitch();
  for (int p : {-3, 0, 9})
    for (int q : {-1, 4}) {
      const double phase = -2 * kPi * (p * df * g.coordinate(40) + q * df * g.coordinate(20));
      EXPECT_NEAR(std::abs(f.at_frequency(p, q) - std::polar(g.pitch * g.pitch, phase)), 0.0, 1e-15);
    }
}

TEST(extract, eigenstates_noiseless) {
  const KernelTable& t = default_table();
  for (int l : {0, 5, 12}) {
    const DensityMatrix rho = DensityMatrix::projector(eigenstate(l, 13));
    const Extraction ex = extract_density_detailed(dft2(intensity_image(rho, t.geometry())), t, 13);
    EXPECT_NEAR((ex.raw.entries() - rho.entries()).cwiseAbs().maxCoeff(), 0.0, 1e-4) << l;
    EXPECT_NEAR(ex.trace_before_normalization.real(), intensity_scale(t.geometry()), 1e-3 * intensity_scale(t.geometry()));
  }
}

TEST(extract, coherences_keep_their_phase) {
  const KernelTable& t = default_table();
  const DensityMatrix rho = rho_m2();
  const DensityMatrix raw = extract_density(dft2(intensity_image(rho, t.geometry())), t, 13);
  EXPECT_NEAR(std::abs(raw(12, 0) - rho(12, 0)), 0.0, 1e-4);
  EXPECT_NEAR(std::abs(raw(0, 12) - rho(0, 12)), 0.0, 1e-4);
}

TEST(extract, raw_is_nearly_hermitian_on_exact_data) {
  const KernelTable& t = default_table();
  for (int k = 0; k < 5; ++k) {
    const DensityMatrix rho = random_density(13, 1 + 3 * k, 40 + k);
    const CMatrix raw = extract_density(dft2(intensity_image(rho, t.geometry())), t, 13).entries();
    EXPECT_LE((raw - raw.adjoint()).norm(), 1e-3);
  }
}

TEST(extract, errors) {
  const KernelTable& t = default_table();
  const BeamGeometry other = BeamGeometry::with_window(0.114, 128, 12);
  const IntensityImage img = intensity_image(DensityMatrix::projector(eigenstate(0, 1)), other);
  EXPECT_THROW(extract_density(dft2(img), t, 13), GeometryMismatch);
  IntensityImage black{t.geometry(), std::vector<double>(t.geometry().pixel_count(), 0.0)};
  EXPECT_THROW(extract_density(dft2(black), t, 13), DegenerateData);
  const IntensityImage ok = intensity_image(DensityMatrix::projector(eigenstate(0, 1)), t.geometry());
  EXPECT_THROW(extract_density(dft2(ok), t, 14), GeometryMismatch);
}

TEST(extract, waist_miscalibration_is_allowed) {
  // Same grid, different sigma: the kernels mismatch but the call succeeds.
  BeamGeometry g = default_table().geometry();
  g.sigma *= 1.05;
  const KernelTable t = build_kernel_table(g, 12);
  const IntensityImage img = intensity_image(DensityMatrix::projector(eigenstate(3, 13)), default_table().geometry());
  const DensityMatrix raw = extract_density(dft2(img), t, 13);
  EXPECT_GT(std::abs(raw(3, 3) - 1.0), 1e-3);
}

TEST(kernel_gram, near_identity_small) {
  const KernelTable t = build_kernel_table(BeamGeometry{}, 4);
  const CMatrix gram = kernel_gram(t, 5);
  EXPECT_LT((gram - CMatrix::Identity(25, 25)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(cholesky, parameter_round_trip) {
  const DensityMatrix r = random_density(6, 4, 5);
  const CholeskyParams p = CholeskyParams::from_density(r.entries(), 0.0 + 1e-14);
  EXPECT_NEAR((p.density() - r.entries()).cwiseAbs().maxCoeff(), 0.0, 1e-10);
  const CMatrix low = p.lower();
  EXPECT_EQ(CholeskyParams::from_lower(low).t, p.t);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) EXPECT_EQ(low(i, j), Complex(0.0, 0.0));
  EXPECT_EQ(p.t.size(), 36);
}

TEST(cholesky, layout_is_diagonal_then_offsets) {
  CholeskyParams p = CholeskyParams::zero(3);
  p.t << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const CMatrix l = p.lower();
  EXPECT_EQ(l(0, 0), Complex(1, 0));
  EXPECT_EQ(l(2, 2), Complex(3, 0));
  EXPECT_EQ(l(1, 0), Complex(4, 5));
  EXPECT_EQ(l(2, 1), Complex(6, 7));
  EXPECT_EQ(l(2, 0), Complex(8, 9));
}

TEST(cholesky, gradient_matches_finite_differences) {
  const DensityMatrix target = perturbed(4, 3, 0.05);
  const CMatrix h = 0.5 * (target.entries() + target.entries().adjoint());
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  Eigen::VectorXd t(16);
  for (auto& v : t) v = n(gen);
  Eigen::VectorXd grad, scratch;
  cholesky_cost(t, h, grad);
  for (int k = 0; k < 16; ++k) {
    Eigen::VectorXd up = t, dn = t;
    up(k) += 1e-6;
    dn(k) -= 1e-6;
    const double fd = (cholesky_cost(up, h, scratch) - cholesky_cost(dn, h, scratch)) / 2e-6;
    EXPECT_NEAR(grad(k), fd, 1e-6 * (1 + std::abs(fd))) << k;
  }
}

TEST(physicalize, postconditions_and_optimality) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const DensityMatrix raw = perturbed(7, seed, 0.03);
    const Physicalization ph = physicalize_detailed(raw);
    const CMatrix& r = ph.rho.entries();
    EXPECT_LE((r - r.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(std::abs(r.trace() - 1.0), 1e-10);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(r);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
    const double clip = cost_of(clipped_eigen_projection(raw.entries() / raw.entries().trace().real()), raw.entries());
    const double exact = cost_of(simplex_projection(raw.entries()), raw.entries());
    EXPECT_LE(ph.cost, clip + 1e-6);
    EXPECT_NEAR(ph.cost, exact, 1e-6);
  }
}

TEST(physicalize, rescaled_mixture_recovers_state) {
  const DensityMatrix raw = DensityMatrix::raw(0.9 * rho_m1().entries());
  const DensityMatrix r = physicalize(raw);
  EXPECT_NEAR((r.entries() - rho_m1().entries()).cwiseAbs().maxCoeff(), 0.0, 1e-8);
}

TEST(physicalize, physical_input_is_a_fixed_point) {
  const DensityMatrix r = random_density(5, 5, 2);
  EXPECT_NEAR((physicalize(r).entries() - r.entries()).cwiseAbs().maxCoeff(), 0.0, 1e-8);
}

TEST(physicalize, rejects_bad_input) {
  CMatrix m = CMatrix::Zero(3, 3);
  EXPECT_THROW(physicalize(DensityMatrix::raw(m)), DegenerateData);
  m(0, 0) = NAN;
  EXPECT_THROW(physicalize(DensityMatrix::raw(m)), InvalidInput);
}

TEST(fidelity, basic_values) {
  const DensityMatrix r = random_density(13, 4, 8);
  EXPECT_NEAR(fidelity(r, r), 1.0, 1e-10);
  EXPECT_NEAR(fidelity(DensityMatrix::projector(eigenstate(0, 3)), DensityMatrix::projector(eigenstate(2, 3))), 0.0, 1e-14);
  CMatrix half = CMatrix::Identity(2, 2) * 0.5;
  EXPECT_NEAR(fidelity(DensityMatrix::projector(eigenstate(0, 2)), DensityMatrix::physical(half)), 0.5, 1e-14);
  // Pure states: |<a|b>|^2.
  const PureState a = superposition({1.0, Complex(0, 1)}, 2), b = superposition({1.0, 1.0}, 2);
  EXPECT_NEAR(fidelity(DensityMatrix::projector(a), DensityMatrix::projector(b)), 0.5, 1e-14);
  EXPECT_THROW(fidelity(r, DensityMatrix::projector(eigenstate(0, 3))), InvalidInput);
  CMatrix neg(2, 2);
  neg << 1.2, 0, 0, -0.2;
  EXPECT_THROW(fidelity(DensityMatrix::raw(neg), DensityMatrix::physical(half)), InvalidInput);
}

TEST(fidelity, symmetric) {
  for (int k = 0; k < 20; ++k) {
    const DensityMatrix a = random_density(13, 1 + k % 13, 100 + k), b = random_density(13, 1 + (k * 5) % 13, 200 + k);
    EXPECT_NEAR(fidelity(a, b), fidelity(b, a), 1e-10);
  }
}

TEST(fit_waist, recovers_sigma_from_vacuum_image) {
  const BeamGeometry g;
  const WaistFit fit = fit_waist(intensity_image(DensityMatrix::projector(eigenstate(0, 1)), g));
  EXPECT_NEAR(fit.sigma, g.sigma, 1e-6);
  EXPECT_NEAR(fit.x0, 0.0, 1e-9);
  EXPECT_GT(fit.r_squared, 0.999999);
}

TEST(fit_waist, rejects_non_gaussian) {
  const BeamGeometry g;
  EXPECT_THROW(fit_waist(intensity_image(DensityMatrix::projector(eigenstate(7, 13)), g)), FitError);
  IntensityImage black{g, std::vector<double>(g.pixel_count(), 0.0)};
  EXPECT_THROW(fit_waist(black), DegenerateData);
}

TEST(reconstruct, pipeline_with_gouy_rotation) {
  const KernelTable& t = default_table();
  const DensityMatrix rho = random_density(13, 2, 77);
  const Reconstruction r = reconstruct(far_field_image(rho, t.geometry()), t, 13);
  EXPECT_GT(fidelity(rho, r.physical), 0.999);
  EXPECT_EQ(r.r_cut, t.r_cut());
  EXPECT_LT(r.cost, 1e-6);
}

TEST(reconstruct, dark_subtraction) {
  const KernelTable& t = default_table();
  const DensityMatrix rho = DensityMatrix::projector(psi_g());
  NoiseModel dark;
  dark.dark_level = 0.01;
  const IntensityImage img = apply_noise(intensity_image(rho, t.geometry()), dark, 0);
  const double with = fidelity(rho, reconstruct(img, t, 13, {true, 0.01}).physical);
  EXPECT_GT(with, 0.999);
}

TEST(reconstruct, monotone_degradation_with_photon_budget) {
  const KernelTable& t = default_table();
  const DensityMatrix rho = random_density(13, 2, 321);
  const IntensityImage clean = intensity_image(rho, t.geometry());
  auto median_fidelity = [&](double budget) {
    NoiseModel m;
    m.photon_budget = budget;
    std::vector<double> f;
    for (int k = 0; k < 20; ++k) f.push_back(fidelity(rho, reconstruct(apply_noise(clean, m, derive_seed(5, k)), t, 13).physical));
    std::nth_element(f.begin(), f.begin() + 10, f.end());
    return f[10];
  };
  const double f5 = median_fidelity(1e5), f6 = median_fidelity(1e6), f7 = median_fidelity(1e7);
  EXPECT_LE(f5, f6) << "medians 1e5/1e6/1e7: " << f5 << " " << f6 << " " << f7;
  EXPECT_LE(f6, f7) << "medians 1e5/1e6/1e7: " << f5 << " " << f6 << " " << f7;
}
