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

#include "ahst/specfun.hpp"

#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"

using namespace ahst;

TEST(specfun, log_factorial_small) {
  EXPECT_EQ(specfun::log_factorial(0), 0.0);
  EXPECT_EQ(specfun::log_factorial(1), 0.0);
  EXPECT_NEAR(specfun::log_factorial(5), std::log(120.0), 1e-15);
  EXPECT_NEAR(specfun::log_factorial(12), 19.987214495661885, 1e-13);
}

TEST(specfun, log_factorial_matches_multiprecision) {
  for (int n : {2, 7, 13, 30, 90, 170, 171, 300}) {
    const double want = oracle::log_factorial(n);
    EXPECT_NEAR(specfun::log_factorial(n), want, 1e-14 * want) << n;
  }
}

TEST(specfun, log_factorial_rejects_negative) { EXPECT_THROW(specfun::log_factorial(-1), InvalidInput); }

TEST(specfun, laguerre_low_orders) {
  const double x = 0.37;
  EXPECT_EQ(specfun::laguerre_assoc(0, 4, x), 1.0);
  EXPECT_NEAR(specfun::laguerre_assoc(1, 4, x), 5.0 - x, 1e-15);
  EXPECT_NEAR(specfun::laguerre_assoc(2, 0, x), 0.5 * (x * x - 4 * x + 2), 1e-15);
  EXPECT_NEAR(specfun::laguerre_assoc({5, 3, 2.5}), -3617.0 / 768.0, 1e-13);
}

TEST(specfun, laguerre_matches_series) {
  double worst = 0;
  for (int n = 0; n <= 12; ++n)
    for (int a = 0; a <= 12; ++a)
      for (double x : {0.0, 0.01, 0.5, 1.7, 4.0, 9.5, 20.0, 50.0, 72.0}) {
        const double want = oracle::laguerre_series(n, a, x);
        const double got = specfun::laguerre_assoc(n, a, x);
        // Absolute scale: the largest term in the series bounds the cancellation error.
        double scale = 1.0;
        for (int k = 0; k <= n; ++k)
          scale = std::max(scale, static_cast<double>(oracle::binomial(n + a, n - k) / oracle::factorial(k)) *
                                      std::pow(x, k));
        worst = std::max(worst, std::abs(got - want) / scale);
      }
  EXPECT_LT(worst, 1e-13);
}

TEST(specfun, laguerre_rejects_bad_arguments) {
  EXPECT_THROW(specfun::laguerre_assoc(-1, 0, 1.0), InvalidInput);
  EXPECT_THROW(specfun::laguerre_assoc(1, -2, 1.0), InvalidInput);
  EXPECT_THROW(specfun::laguerre_assoc(1, 0, NAN), InvalidInput);
}

TEST(specfun, factorial_ratio) {
  EXPECT_NEAR(specfun::factorial_ratio(3, 3), 1.0, 1e-15);
  EXPECT_NEAR(specfun::factorial_ratio(2, 5), std::sqrt(2.0 * 120.0) / 120.0, 1e-15);
  EXPECT_DOUBLE_EQ(specfun::factorial_ratio(5, 2), specfun::factorial_ratio(2, 5));
  EXPECT_NEAR(specfun::factorial_ratio(0, 12), 1.0 / std::sqrt(479001600.0), 1e-18);
}

TEST(specfun, laguerre_at_zero_is_binomial) {
  for (int n = 0; n <= 24; ++n)
    for (int a = 0; a <= 24; ++a) {
      const double want = static_cast<double>(oracle::binomial(n + a, n));
      EXPECT_NEAR(specfun::laguerre_assoc(n, a, 0.0), want, 1e-12 * want) << n << "," << a;
    }
}

TEST(specfun, laguerre_random_samples_match_series) {
  // Relative error, with the denominator floored at 1e-6 of the series' largest term so that
  // samples sitting on a root (where any finite-precision value has unbounded relative error)
  // are judged on the cancellation scale instead.
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> deg(0, 24), ord(0, 12);
  std::uniform_real_distribution<double> xs(0.0, 50.0);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = deg(gen), a = ord(gen);
    const double x = xs(gen);
    const double want = oracle::laguerre_series(n, a, x);
    double scale = 0;
    for (int j = 0; j <= n; ++j)
      scale = std::max(scale, static_cast<double>(oracle::binomial(n + a, n - j) / oracle::factorial(j)) * std::pow(x, j));
    const double err = std::abs(specfun::laguerre_assoc(n, a, x) - want) / std::max(std::abs(want), 1e-6 * scale);
    worst = std::max(worst, err);
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(specfun, laguerre_orthogonality_by_quadrature) {
  for (int a = 0; a <= 12; ++a) {
    const auto [x, w] = oracle::gauss_laguerre(14, a);
    for (int m = 0; m <= 12; ++m)
      for (int n = 0; n <= 12; ++n) {
        double sum = 0;
        for (int k = 0; k < x.size(); ++k) sum += w(k) * specfun::laguerre_assoc(m, a, x(k)) * specfun::laguerre_assoc(n, a, x(k));
        const double norm = std::exp(oracle::log_factorial(m + a) - oracle::log_factorial(m));
        EXPECT_NEAR(sum / norm, m == n ? 1.0 : 0.0, 1e-6) << m << "," << n << "," << a;
      }
  }
}
