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

// Dense BFGS for small smooth problems with analytic gradients.

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace ahst::optimize {

struct BfgsOptions {
  double gradient_tolerance = 1e-9;
  int max_iterations = 5000;
  // Wolfe constants.
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_steps = 60;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes f, where f(x, grad) returns the value and writes the gradient.
template <typename Objective>
BfgsResult minimize_bfgs(Objective&& f, Eigen::VectorXd x, const BfgsOptions& opt = {}) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  double fx = f(x, g);
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian approximation
  bool scaled = false;

  BfgsResult result;
  Eigen::VectorXd x_new(n), g_new(n);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (g.norm() <= opt.gradient_tolerance) break;
    Eigen::VectorXd dir = -h * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }

    // Bracketing line search for the weak Wolfe conditions, bisection/expansion on failure.
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), step = 1.0;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < opt.max_line_search_steps; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new, g_new);
      if (!std::isfinite(f_new) || f_new > fx + opt.c1 * step * slope) {
        hi = step;
      } else if (g_new.dot(dir) < opt.c2 * slope) {
        lo = step;
      } else {
        accepted = true;
        break;
      }
      step = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
    }
    if (!accepted) {
      // Accept any strict decrease; otherwise we are at the resolution limit.
      if (!(std::isfinite(f_new) && f_new < fx)) break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    x = x_new;
    g = g_new;
    const double f_prev = fx;
    fx = f_new;
    if (sy > 1e-300) {
      if (!scaled) {
        h *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      h += ((sy + y.dot(hy)) * rho * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
    if (f_prev - fx <= 0.0 && !accepted) break;
  }
  result.x = std::move(x);
  result.value = fx;
  result.gradient_norm = g.norm();
  result.iterations = it;
  result.converged = result.gradient_norm <= opt.gradient_tolerance;
  return result;
}

}  // namespace ahst::optimize
