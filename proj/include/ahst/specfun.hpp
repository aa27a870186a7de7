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

// Special functions behind the mode and kernel evaluations.

#include <array>
#include <cmath>
#include <cstddef>

#include "ahst/error.hpp"

namespace ahst::specfun {

struct LaguerreParams {
  int degree = 0;  // n
  int order = 0;   // alpha
  double x = 0.0;
};

namespace detail {

inline constexpr int kLogFactorialTable = 171;

inline const std::array<double, kLogFactorialTable>& log_factorial_table() {
  static const std::array<double, kLogFactorialTable> table = [] {
    std::array<double, kLogFactorialTable> t{};
    long double acc = 0.0L;
    t[0] = 0.0;
    for (int k = 1; k < kLogFactorialTable; ++k) {
      acc += std::log(static_cast<long double>(k));
      t[k] = static_cast<double>(acc);
    }
    return t;
  }();
  return table;
}

}  // namespace detail

/// ln(n!). Tabulated by long-double accumulation up to 170, lgamma beyond.
inline double log_factorial(int n) {
  require(n >= 0, "log_factorial: negative argument");
  if (n < detail::kLogFactorialTable) return detail::log_factorial_table()[n];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

/// Generalized Laguerre polynomial L_n^alpha(x) by upward three-term recurrence in n:
///   (k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}.
/// Forward-stable for alpha >= 0, x >= 0.
inline double laguerre_assoc(const LaguerreParams& p) {
  require(p.degree >= 0 && p.order >= 0, "laguerre_assoc: negative degree or order");
  require(std::isfinite(p.x), "laguerre_assoc: non-finite argument");
  const double a = p.order;
  const double x = p.x;
  if (p.degree == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 + a - x;
  for (int k = 1; k < p.degree; ++k) {
    const double next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

inline double laguerre_assoc(int degree, int order, double x) {
  return laguerre_assoc(LaguerreParams{degree, order, x});
}

/// sqrt(l1! l2!) / max(l1, l2)!, formed in log space.
inline double factorial_ratio(int l1, int l2) {
  const int hi = l1 > l2 ? l1 : l2;
  return std::exp(0.5 * (log_factorial(l1) + log_factorial(l2)) - log_factorial(hi));
}

}  // namespace ahst::specfun
