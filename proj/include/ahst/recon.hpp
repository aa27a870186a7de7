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

// The tomography inverse: centered DFT of the intensity image, projection onto the
// conjugated kernels, Cholesky-parametrized least squares onto physical states, fidelity,
// and beam-waist calibration.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "ahst/error.hpp"
#include "ahst/imaging.hpp"
#include "ahst/modes.hpp"
#include "ahst/optimize.hpp"
#include "ahst/states.hpp"

namespace ahst {

/// N x N complex samples on the centered frequency grid of `geometry`, row-major (row along f_y).
struct FourierImage {
  BeamGeometry geometry;
  std::vector<Complex> values;

  Complex at(int row, int col) const { return values[static_cast<std::size_t>(row) * geometry.n_pixels + col]; }
  /// Sample at integer frequency indices (p along x, q along y).
  Complex at_frequency(int p, int q) const {
    const int z = geometry.zero_frequency_position();
    return at(q + z, p + z);
  }
};

namespace detail {

/// In-place centered 1D transform of `line`: out[i] = sum_m in[m] exp(-i2pi p x_m df),
/// p = i - N/2 + 1, x_m = (m - (N-1)/2) dx.
inline void centered_dft_line(Eigen::FFT<double>& fft, std::vector<Complex>& line, std::vector<Complex>& scratch) {
  const int n = static_cast<int>(line.size());
  fft.fwd(scratch, line);
  for (int i = 0; i < n; ++i) {
    const int p = i - n / 2 + 1;
    const int k = ((p % n) + n) % n;
    line[i] = scratch[k] * std::polar(1.0, std::numbers::pi * p * (n - 1.0) / n);
  }
}

}  // namespace detail

/// Centered 2D DFT scaled by dx*dy, approximating the continuous transform
/// \int I(x) exp(-i2pi f.x) d^2x at f = (p, q) * df.
inline FourierImage dft2(const IntensityImage& image) {
  image.validate();
  const BeamGeometry& g = image.geometry;
  const int n = g.n_pixels;
  FourierImage out{g, std::vector<Complex>(g.pixel_count())};
  Eigen::FFT<double> fft;
  std::vector<Complex> line(n), scratch(n);
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) line[col] = image.at(row, col);
    detail::centered_dft_line(fft, line, scratch);
    std::copy(line.begin(), line.end(), out.values.begin() + static_cast<std::ptrdiff_t>(row) * n);
  }
  const double area = g.pitch * g.pitch;
  for (int col = 0; col < n; ++col) {
    for (int row = 0; row < n; ++row) line[row] = out.values[static_cast<std::size_t>(row) * n + col];
    detail::centered_dft_line(fft, line, scratch);
    for (int row = 0; row < n; ++row) out.values[static_cast<std::size_t>(row) * n + col] = line[row] * area;
  }
  return out;
}

struct Extraction {
  DensityMatrix raw;
  Complex trace_before_normalization;
};

/// rho_{l1,l2} = C sum_{f_r <= r_cut} I~(f) conj(P_{l1,l2}(f)) exp(2R^2) df^2, divided by its trace.
inline Extraction extract_density_detailed(const FourierImage& fimage, const KernelTable& table, int d) {
  const BeamGeometry& gi = fimage.geometry;
  const BeamGeometry& gt = table.geometry();
  if (gi.n_pixels != gt.n_pixels || gi.pitch != gt.pitch)
    throw GeometryMismatch("extract_density: image sampling grid differs from kernel table grid");
  if (fimage.values.size() != gi.pixel_count()) throw GeometryMismatch("extract_density: malformed Fourier image");
  require(d >= 1, "extract_density: dimension must be >= 1");
  if (d > table.dim()) throw GeometryMismatch("extract_density: dimension exceeds kernel table l_max + 1");

  const double df = gt.fourier_pitch();
  const auto weight = table.weight();
  std::vector<Complex> weighted(fimage.values.size());
  for (std::size_t k = 0; k < weighted.size(); ++k) weighted[k] = fimage.values[k] * weight[k];

  CMatrix rho(d, d);
  parallel_for(static_cast<std::size_t>(d * d), [&](std::size_t idx) {
    const int a = static_cast<int>(idx) / d;
    const int b = static_cast<int>(idx) % d;
    const auto kernel = table.grid(a, b);
    Complex acc{};
    for (std::size_t k = 0; k < kernel.size(); ++k) acc += weighted[k] * std::conj(kernel[k]);
    rho(a, b) = table.constant(a, b) * acc * df * df;
  });
  const Complex trace = rho.trace();
  if (!std::isfinite(trace.real()) || trace.real() == 0.0)
    throw DegenerateData("extract_density: zero trace (no signal in the image)");
  rho /= trace.real();
  return {DensityMatrix::raw(std::move(rho)), trace};
}

inline DensityMatrix extract_density(const FourierImage& fimage, const KernelTable& table, int d) {
  return extract_density_detailed(fimage, table, d).raw;
}

/// Discrete weighted inner products M[(a,b),(c,e)] = C sum P_{c,e} conj(P_{a,b}) e^{2R^2} df^2
/// over the cutoff disk, with pairs flattened as a*d + b. Ideally the identity.
inline CMatrix kernel_gram(const KernelTable& table, int d) {
  require(d >= 1 && d <= table.dim(), "kernel_gram: dimension out of range");
  const auto weight = table.weight();
  std::vector<std::size_t> inside;
  for (std::size_t k = 0; k < weight.size(); ++k)
    if (weight[k] > 0.0) inside.push_back(k);
  const Eigen::Index pairs = static_cast<Eigen::Index>(d) * d;
  const Eigen::Index points = static_cast<Eigen::Index>(inside.size());
  CMatrix k_mat(pairs, points);
  Eigen::VectorXd w(points);
  for (Eigen::Index j = 0; j < points; ++j) w(j) = weight[inside[j]];
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const auto grid = table.grid(a, b);
      for (Eigen::Index j = 0; j < points; ++j) k_mat(a * d + b, j) = grid[inside[j]];
    }
  const double df = table.geometry().fourier_pitch();
  const double c = table.constant(0, 0) * df * df;
  return c * (k_mat.conjugate() * w.asDiagonal() * k_mat.transpose());
}

// ---------------------------------------------------------------------------------------
// Cholesky parametrization

/// Real parameters t (length d^2) of a lower-triangular T: t[0..d) on the diagonal, then
/// (re, im) pairs diagonal by diagonal: T(1,0), T(2,1), ..., T(d-1,d-2), T(2,0), ..., T(d-1,0).
struct CholeskyParams {
  int dim = 0;
  Eigen::VectorXd t;

  static CholeskyParams zero(int d) { return {d, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) * d)}; }

  CMatrix lower() const {
    require(t.size() == static_cast<Eigen::Index>(dim) * dim, "cholesky params: length must be d^2");
    CMatrix m = CMatrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) m(i, i) = t(i);
    Eigen::Index k = dim;
    for (int off = 1; off < dim; ++off)
      for (int row = off; row < dim; ++row, k += 2) m(row, row - off) = Complex(t(k), t(k + 1));
    return m;
  }

  static CholeskyParams from_lower(const CMatrix& m) {
    const int d = static_cast<int>(m.rows());
    CholeskyParams p = zero(d);
    for (int i = 0; i < d; ++i) p.t(i) = m(i, i).real();
    Eigen::Index k = d;
    for (int off = 1; off < d; ++off)
      for (int row = off; row < d; ++row, k += 2) {
        p.t(k) = m(row, row - off).real();
        p.t(k + 1) = m(row, row - off).imag();
      }
    return p;
  }

  /// rho(T) = T^dagger T / tr(T^dagger T).
  CMatrix density() const {
    const CMatrix low = lower();
    CMatrix m = low.adjoint() * low;
    const double tr = m.trace().real();
    require(tr > 0.0, "cholesky params: all-zero parameter vector");
    return m / tr;
  }

  /// Lower-triangular T with T^dagger T = rho (rho PSD), via Cholesky of the index-reversed matrix.
  static CholeskyParams from_density(const CMatrix& rho, double ridge = 1e-12) {
    const int d = static_cast<int>(rho.rows());
    CMatrix rev(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) rev(i, j) = rho(d - 1 - i, d - 1 - j);
    rev = 0.5 * (rev + rev.adjoint()).eval();
    rev += ridge * CMatrix::Identity(d, d);
    Eigen::LLT<CMatrix> llt(rev);
    if (llt.info() != Eigen::Success) throw InvalidInput("cholesky params: matrix is not positive semi-definite");
    const CMatrix l = llt.matrixL();  // rev = L L^dagger
    // rho = J L J (J L J)^dagger with J L J upper triangular, so T = (J L J)^dagger.
    CMatrix u(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) u(i, j) = l(d - 1 - i, d - 1 - j);
    return from_lower(u.adjoint());
  }
};

/// S = sum |rho - target|^2 and its gradient with respect to the Cholesky parameters.
inline double cholesky_cost(const Eigen::VectorXd& t, const CMatrix& target, Eigen::VectorXd& grad) {
  const int d = static_cast<int>(target.rows());
  const CholeskyParams p{d, t};
  const CMatrix low = p.lower();
  const CMatrix m = low.adjoint() * low;
  const double tau = m.trace().real();
  if (!(tau > 0.0)) {
    grad.setZero(t.size());
    return std::numeric_limits<double>::infinity();
  }
  const CMatrix rho = m / tau;
  const CMatrix diff = rho - target;
  const double cost = diff.squaredNorm();
  // dS = (4/tau) Re tr(G' T^dagger dT) with G' = H - tr(H rho) I, H the Hermitian part of diff.
  CMatrix h = 0.5 * (diff + diff.adjoint());
  const Complex shift = (h * rho).trace();
  h -= shift.real() * CMatrix::Identity(d, d);
  const CMatrix x = low * h;  // dS = (4/tau) Re sum conj(x_ij) dT_ij
  const double s = 4.0 / tau;
  grad.resize(t.size());
  for (int i = 0; i < d; ++i) grad(i) = s * x(i, i).real();
  Eigen::Index k = d;
  for (int off = 1; off < d; ++off)
    for (int row = off; row < d; ++row, k += 2) {
      grad(k) = s * x(row, row - off).real();
      grad(k + 1) = s * x(row, row - off).imag();
    }
  return cost;
}

/// Hermitize, eigendecompose, clip negative eigenvalues, renormalize the trace.
inline CMatrix clipped_eigen_projection(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  Eigen::VectorXd w = eig.eigenvalues().cwiseMax(0.0);
  const double total = w.sum();
  if (!(total > 0.0)) throw DegenerateData("physicalize: no positive eigenvalue to keep");
  w /= total;
  return eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().adjoint();
}

struct Physicalization {
  DensityMatrix rho;
  double cost = 0.0;  // S against the trace-normalized raw matrix
  double min_eigenvalue_raw = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Least-squares physical state under the Cholesky parametrization. The raw matrix is divided
/// by its (real) trace first, then hermitized; BFGS starts from (a) the clipped-eigenvalue
/// projection and (b) the maximally mixed state, and keeps the better optimum.
inline Physicalization physicalize_detailed(const DensityMatrix& raw, const optimize::BfgsOptions& opt = {}) {
  const CMatrix& input = raw.entries();
  if (!input.allFinite()) throw InvalidInput("physicalize: non-finite input");
  const int d = raw.dim();
  const double tr = input.trace().real();
  if (!(tr > 0.0)) throw DegenerateData("physicalize: raw matrix has non-positive trace");
  const CMatrix normalized_raw = input / tr;
  const CMatrix target = 0.5 * (normalized_raw + normalized_raw.adjoint());

  Eigen::SelfAdjointEigenSolver<CMatrix> eig(target, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();

  auto objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd& grad) { return cholesky_cost(t, target, grad); };
  std::vector<CholeskyParams> starts;
  starts.push_back(CholeskyParams::from_density(clipped_eigen_projection(target)));
  starts.push_back(CholeskyParams::from_density(CMatrix::Identity(d, d) / static_cast<double>(d)));

  optimize::BfgsResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    auto r = optimize::minimize_bfgs(objective, start.t, opt);
    if (r.value < best.value) best = std::move(r);
  }
  CMatrix rho = CholeskyParams{d, best.x}.density();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  const double cost = (rho - normalized_raw).squaredNorm();
  return {DensityMatrix::physical(std::move(rho)), cost, min_eig, best.iterations, best.converged};
}

inline DensityMatrix physicalize(const DensityMatrix& raw) { return physicalize_detailed(raw).rho; }

// ---------------------------------------------------------------------------------------
// Fidelity

namespace detail {

inline CMatrix psd_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  CMatrix r = eig.eigenvectors() * s.asDiagonal() * eig.eigenvectors().adjoint();
  return 0.5 * (r + r.adjoint());
}

}  // namespace detail

/// Uhlmann fidelity (Tr sqrt(sqrt(rt) re sqrt(rt)))^2, evaluated as the squared trace norm of
/// sqrt(rt) sqrt(re); clipped to [0, 1].
inline double fidelity(const DensityMatrix& rho_t, const DensityMatrix& rho_e) {
  if (rho_t.dim() != rho_e.dim()) throw InvalidInput("fidelity: dimension mismatch");
  const PhysicalityTolerance tol{1e-8, 1e-8, -1e-8};
  if (!DensityMatrix::check_physical(rho_t.entries(), tol) || !DensityMatrix::check_physical(rho_e.entries(), tol))
    throw InvalidInput("fidelity: non-physical input");
  const CMatrix prod = detail::psd_sqrt(rho_t.entries()) * detail::psd_sqrt(rho_e.entries());
  Eigen::JacobiSVD<CMatrix> svd(prod);
  const double trace_norm = svd.singularValues().sum();
  return std::clamp(trace_norm * trace_norm, 0.0, 1.0);
}

// ---------------------------------------------------------------------------------------
// Beam-waist calibration

struct WaistFit {
  double sigma = 0.0;
  double sigma_stderr = 0.0;
  double amplitude = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
  double background = 0.0;
  double r_squared = 0.0;
  int iterations = 0;
};

/// Minimum coefficient of determination accepted from fit_waist.
inline constexpr double kMinWaistFitRSquared = 0.95;

/// Levenberg-Marquardt fit of A exp(-2((x-x0)^2 + (y-y0)^2)/sigma^2) + b over all pixels.
inline WaistFit fit_waist(const IntensityImage& image) {
  image.validate();
  const BeamGeometry& g = image.geometry;
  const int n = g.n_pixels;

  double total = 0.0, mx = 0.0, my = 0.0, peak = 0.0;
  double floor_level = std::numeric_limits<double>::infinity();
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      const double v = image.at(row, col);
      total += v;
      mx += v * g.coordinate(col);
      my += v * g.coordinate(row);
      peak = std::max(peak, v);
      floor_level = std::min(floor_level, v);
    }
  if (!(total > 0.0)) throw DegenerateData("fit_waist: black image");
  mx /= total;
  my /= total;
  double mr2 = 0.0;
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      const double dx = g.coordinate(col) - mx, dy = g.coordinate(row) - my;
      mr2 += image.at(row, col) * (dx * dx + dy * dy);
    }
  mr2 /= total;

  // Parameters: amplitude, x0, y0, sigma, background.
  Eigen::Matrix<double, 5, 1> p;
  p << peak - floor_level, mx, my, std::sqrt(2.0 * mr2), floor_level;

  auto accumulate = [&](const Eigen::Matrix<double, 5, 1>& q, Eigen::Matrix<double, 5, 5>* jtj,
                        Eigen::Matrix<double, 5, 1>* jtr) {
    double ss = 0.0;
    if (jtj) jtj->setZero();
    if (jtr) jtr->setZero();
    const double s2 = q(3) * q(3);
    for (int row = 0; row < n; ++row) {
      const double dy = g.coordinate(row) - q(2);
      for (int col = 0; col < n; ++col) {
        const double dx = g.coordinate(col) - q(1);
        const double r2 = dx * dx + dy * dy;
        const double e = std::exp(-2.0 * r2 / s2);
        const double model = q(0) * e + q(4);
        const double resid = image.at(row, col) - model;
        ss += resid * resid;
        if (jtj) {
          Eigen::Matrix<double, 5, 1> j;
          j << e, q(0) * e * 4.0 * dx / s2, q(0) * e * 4.0 * dy / s2, q(0) * e * 4.0 * r2 / (s2 * q(3)), 1.0;
          jtj->noalias() += j * j.transpose();
          *jtr += j * resid;
        }
      }
    }
    return ss;
  };

  Eigen::Matrix<double, 5, 5> jtj;
  Eigen::Matrix<double, 5, 1> jtr;
  double cost = accumulate(p, &jtj, &jtr);
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  for (; it < 200; ++it) {
    Eigen::Matrix<double, 5, 5> a = jtj;
    a.diagonal() *= 1.0 + lambda;
    const Eigen::Matrix<double, 5, 1> step = a.ldlt().solve(jtr);
    const Eigen::Matrix<double, 5, 1> trial = p + step;
    const double trial_cost = trial(3) > 0.0 ? accumulate(trial, nullptr, nullptr) : std::numeric_limits<double>::infinity();
    if (std::isfinite(trial_cost) && trial_cost <= cost) {
      const bool small = step.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + p.cwiseAbs().maxCoeff()) ||
                         cost - trial_cost <= 1e-15 * cost;
      p = trial;
      cost = accumulate(p, &jtj, &jtr);
      lambda = std::max(lambda / 10.0, 1e-12);
      if (small) {
        converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) {
        converged = true;  // no further decrease possible at machine precision
        break;
      }
    }
  }
  if (!converged || !p.allFinite() || !(p(3) > 0.0) || !(p(0) > 0.0))
    throw FitError("fit_waist: Gaussian fit diverged");

  double mean = total / static_cast<double>(g.pixel_count());
  double ss_tot = 0.0;
  for (double v : image.pixels) ss_tot += (v - mean) * (v - mean);
  const double r_squared = ss_tot > 0.0 ? 1.0 - cost / ss_tot : 0.0;
  if (r_squared < kMinWaistFitRSquared)
    throw FitError("fit_waist: image is not a Gaussian spot (R^2 = " + std::to_string(r_squared) + ")");

  const double dof = static_cast<double>(g.pixel_count()) - 5.0;
  const Eigen::Matrix<double, 5, 5> cov = jtj.inverse() * (cost / dof);
  WaistFit fit;
  fit.amplitude = p(0);
  fit.x0 = p(1);
  fit.y0 = p(2);
  fit.sigma = p(3);
  fit.background = p(4);
  fit.sigma_stderr = std::sqrt(std::max(0.0, cov(3, 3)));
  fit.r_squared = r_squared;
  fit.iterations = it;
  return fit;
}

// ---------------------------------------------------------------------------------------
// Pipeline

struct ReconstructionOptions {
  bool subtract_dark = false;
  double dark_level = 0.0;
};

struct Reconstruction {
  DensityMatrix raw;
  DensityMatrix physical;
  Complex trace_before_normalization;
  double min_eigenvalue_raw = 0.0;
  double cost = 0.0;
  double r_cut = 0.0;
};

/// Image -> (optional quarter turn, dark subtraction) -> DFT -> kernel projection -> physicalize.
inline Reconstruction reconstruct(IntensityImage image, const KernelTable& table, int d,
                                  const ReconstructionOptions& opt = {}) {
  if (image.gouy_rotate_90) {
    image = rotate_quarter(image);
    image.gouy_rotate_90 = false;
  }
  if (opt.subtract_dark && opt.dark_level > 0.0) {
    for (double& v : image.pixels) v = std::max(0.0, v - opt.dark_level);
    image.refresh_total();
  }
  if (!(image.total_counts > 0.0)) throw DegenerateData("reconstruct: black image");
  const Extraction ex = extract_density_detailed(dft2(image), table, d);
  Physicalization ph = physicalize_detailed(ex.raw);
  return {ex.raw, std::move(ph.rho), ex.trace_before_normalization, ph.min_eigenvalue_raw, ph.cost, table.r_cut()};
}

}  // namespace ahst
