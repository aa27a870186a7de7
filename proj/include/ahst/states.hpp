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

// OAM state construction over the truncated basis |l>, l = 0..d-1.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ahst/error.hpp"
#include "ahst/specfun.hpp"

namespace ahst {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Unit-norm coefficient vector over |0>..|d-1>.
class PureState {
 public:
  explicit PureState(CVector coeffs) : coeffs_(std::move(coeffs)) {
    require(coeffs_.size() >= 1, "pure state: dimension must be >= 1");
    require(coeffs_.allFinite(), "pure state: non-finite coefficient");
    require(std::abs(coeffs_.squaredNorm() - 1.0) <= 1e-12, "pure state: coefficients not normalized");
  }

  int dim() const { return static_cast<int>(coeffs_.size()); }
  const CVector& coeffs() const { return coeffs_; }
  std::complex<double> operator[](int l) const { return coeffs_(l); }

 private:
  CVector coeffs_;
};

enum class Physicality { raw, physical };

struct PhysicalityTolerance {
  double hermitian = 1e-10;
  double trace = 1e-10;
  double min_eigenvalue = -1e-9;
};

/// d x d density matrix. The physical variant is Hermitian, PSD and trace one; the raw
/// variant is whatever an estimator produced.
class DensityMatrix {
 public:
  static DensityMatrix raw(CMatrix entries) {
    require(entries.rows() == entries.cols() && entries.rows() >= 1, "density matrix: must be square");
    return DensityMatrix(std::move(entries), Physicality::raw);
  }

  /// Validates and tags a physical matrix; throws InvalidInput when the invariants fail.
  static DensityMatrix physical(CMatrix entries, const PhysicalityTolerance& tol = {}) {
    require(entries.rows() == entries.cols() && entries.rows() >= 1, "density matrix: must be square");
    std::string why;
    if (!check_physical(entries, tol, &why)) throw InvalidInput("density matrix not physical: " + why);
    return DensityMatrix(std::move(entries), Physicality::physical);
  }

  static DensityMatrix projector(const PureState& psi) {
    CMatrix m = psi.coeffs() * psi.coeffs().adjoint();
    return DensityMatrix(std::move(m), Physicality::physical);
  }

  static bool check_physical(const CMatrix& m, const PhysicalityTolerance& tol, std::string* why = nullptr) {
    auto fail = [&](const char* msg) {
      if (why) *why = msg;
      return false;
    };
    if (!m.allFinite()) return fail("non-finite entry");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol.hermitian) return fail("not Hermitian");
    if (std::abs(m.trace() - std::complex<double>(1.0, 0.0)) > tol.trace) return fail("trace differs from 1");
    const CMatrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(h, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < tol.min_eigenvalue) return fail("negative eigenvalue");
    return true;
  }

  int dim() const { return static_cast<int>(entries_.rows()); }
  const CMatrix& entries() const { return entries_; }
  Physicality kind() const { return kind_; }
  bool is_physical() const { return kind_ == Physicality::physical; }
  std::complex<double> operator()(int l1, int l2) const { return entries_(l1, l2); }

  double purity() const { return (entries_ * entries_).trace().real(); }

 private:
  DensityMatrix(CMatrix entries, Physicality kind) : entries_(std::move(entries)), kind_(kind) {}

  CMatrix entries_;
  Physicality kind_;
};

inline PureState normalized(CVector v) {
  const double norm = v.norm();
  require(std::isfinite(norm) && norm > 0.0, "superposition: all coefficients are zero");
  v /= norm;
  return PureState(std::move(v));
}

/// |l> in dimension d.
inline PureState eigenstate(int l, int d) {
  require(d >= 1, "eigenstate: dimension must be >= 1");
  require(l >= 0 && l < d, "eigenstate: index out of range");
  CVector v = CVector::Zero(d);
  v(l) = 1.0;
  return PureState(std::move(v));
}

/// Normalized superposition; missing trailing coefficients are zero.
inline PureState superposition(const std::vector<std::complex<double>>& coeffs, int d) {
  require(d >= 1, "superposition: dimension must be >= 1");
  require(static_cast<int>(coeffs.size()) <= d, "superposition: more coefficients than dimension");
  CVector v = CVector::Zero(d);
  for (std::size_t i = 0; i < coeffs.size(); ++i) v(static_cast<Eigen::Index>(i)) = coeffs[i];
  return normalized(std::move(v));
}

/// (|0> - i|12>)/sqrt2.
inline PureState psi_g(int d = 13) {
  require(d >= 13, "psi_g: needs d >= 13");
  CVector v = CVector::Zero(d);
  v(0) = 1.0;
  v(12) = std::complex<double>(0.0, -1.0);
  return normalized(std::move(v));
}

/// Truncated even cat: c_{2l} proportional to alpha^{2l}/sqrt((2l)!), l = 0..6, renormalized
/// over the kept terms (2l < d).
inline PureState even_cat(std::complex<double> alpha = 2.0, int d = 13) {
  require(d >= 1, "even_cat: dimension must be >= 1");
  CVector v = CVector::Zero(d);
  for (int l = 0; l <= 6 && 2 * l < d; ++l)
    v(2 * l) = std::pow(alpha, 2 * l) * std::exp(-0.5 * specfun::log_factorial(2 * l));
  return normalized(std::move(v));
}

/// Truncated squeezed vacuum: c_{2l} proportional to (-tanh gamma)^l sqrt((2l)!)/(2^l l!),
/// l = 0..6, renormalized over the kept terms.
inline PureState squeezed(double gamma = 1.5, int d = 13) {
  require(d >= 1, "squeezed: dimension must be >= 1");
  CVector v = CVector::Zero(d);
  const double t = -std::tanh(gamma);
  for (int l = 0; l <= 6 && 2 * l < d; ++l) {
    const double mag = std::exp(0.5 * specfun::log_factorial(2 * l) - l * std::log(2.0) -
                                specfun::log_factorial(l));
    v(2 * l) = std::pow(t, l) * mag;
  }
  return normalized(std::move(v));
}

/// Coherent state e^{-|a|^2/2} sum a^l/sqrt(l!) |l>, truncated at d-1 and renormalized.
inline PureState coherent_state(std::complex<double> alpha, int d) {
  require(d >= 1, "coherent_state: dimension must be >= 1");
  CVector v = CVector::Zero(d);
  v(0) = 1.0;
  for (int l = 1; l < d; ++l) v(l) = v(l - 1) * alpha / std::sqrt(static_cast<double>(l));
  return normalized(std::move(v));
}

/// |a> + e^{i0.6pi}|e^{i2pi/3} a> + e^{-i0.3pi}|e^{i4pi/3} a>, each component truncated, sum normalized.
inline PureState cat3(std::complex<double> alpha, int d) {
  using std::numbers::pi;
  const auto rot = [](double angle) { return std::polar(1.0, angle); };
  CVector v = coherent_state(alpha, d).coeffs() + rot(0.6 * pi) * coherent_state(alpha * rot(2 * pi / 3), d).coeffs() +
              rot(-0.3 * pi) * coherent_state(alpha * rot(4 * pi / 3), d).coeffs();
  return normalized(std::move(v));
}

/// sum_k w_k |psi_k><psi_k| / sum_k w_k.
inline DensityMatrix mix(const std::vector<std::pair<double, PureState>>& components) {
  require(!components.empty(), "mix: no components");
  const int d = components.front().second.dim();
  double total = 0.0;
  CMatrix rho = CMatrix::Zero(d, d);
  for (const auto& [w, psi] : components) {
    require(std::isfinite(w) && w >= 0.0, "mix: weights must be nonnegative");
    if (psi.dim() != d) throw InvalidInput("mix: dimension mismatch between components");
    rho += w * psi.coeffs() * psi.coeffs().adjoint();
    total += w;
  }
  require(total > 0.0, "mix: weights sum to zero");
  rho /= total;
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix::physical(std::move(rho));
}

/// 1/2 |0><0| + 1/2 |12><12|.
inline DensityMatrix rho_m1(int d = 13) {
  return mix({{0.5, eigenstate(0, d)}, {0.5, eigenstate(12, d)}});
}

/// 1/4 (|0> + e^{i4pi/3}|12>)(h.c.) + 1/2 |6><6|. The first term has weight 1/2 on its
/// normalized projector.
inline DensityMatrix rho_m2(int d = 13) {
  CVector v = CVector::Zero(d);
  v(0) = 1.0;
  v(12) = std::polar(1.0, 4.0 * std::numbers::pi / 3.0);
  return mix({{0.5, normalized(std::move(v))}, {0.5, eigenstate(6, d)}});
}

/// Ginibre-induced random density matrix of the given rank: G G^dagger / tr with G a d x rank
/// complex Gaussian matrix. Deterministic for a fixed seed.
inline DensityMatrix random_density(int d, int rank, std::uint64_t seed) {
  require(d >= 1, "random_density: dimension must be >= 1");
  require(rank >= 1 && rank <= d, "random_density: rank must lie in [1, d]");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix g(d, rank);
  for (int c = 0; c < rank; ++c)
    for (int r = 0; r < d; ++r) {
      const double re = normal(gen);
      const double im = normal(gen);
      g(r, c) = {re, im};
    }
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix::physical(std::move(rho));
}

/// U rho U^dagger with U = diag(e^{i theta l}).
inline DensityMatrix rotate_phase(const DensityMatrix& rho, double theta) {
  const int d = rho.dim();
  CMatrix out = rho.entries();
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) out(a, b) *= std::polar(1.0, theta * (a - b));
  return rho.is_physical() ? DensityMatrix::physical(std::move(out)) : DensityMatrix::raw(std::move(out));
}

struct NamedState {
  std::string name;
  DensityMatrix rho;
};

/// The eighteen benchmark states: |0>..|12>, psi_G, psi_c, psi_s, rho_m1, rho_m2 (d = 13).
inline std::vector<NamedState> benchmark_states() {
  constexpr int d = 13;
  std::vector<NamedState> out;
  for (int l = 0; l < d; ++l) out.push_back({"l=" + std::to_string(l), DensityMatrix::projector(eigenstate(l, d))});
  out.push_back({"psi_G", DensityMatrix::projector(psi_g(d))});
  out.push_back({"psi_c", DensityMatrix::projector(even_cat(2.0, d))});
  out.push_back({"psi_s", DensityMatrix::projector(squeezed(1.5, d))});
  out.push_back({"rho_m1", rho_m1(d)});
  out.push_back({"rho_m2", rho_m2(d)});
  return out;
}

}  // namespace ahst
