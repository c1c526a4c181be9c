// Copyright 2026 The Catstab Authors.
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

#include "catstab/rk45.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "catstab/errors.hpp"

namespace catstab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 5th-minus-4th order weights (error estimator), applied to k1..k7.
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
constexpr double e4 = 125.0 / 192 - 393.0 / 640;
constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
constexpr double e7 = -1.0 / 40;

}  // namespace

Rk45Stats rk45_integrate(const RhsFn& rhs, Eigen::VectorXcd& y, double t0,
                         double t1, const Rk45Options& opts,
                         const PostStepFn& post_step) {
  if (!(opts.rel_tol > 0))
    throw IntegratorError("relative tolerance must be positive");
  if (t1 < t0) throw IntegratorError("integration interval is reversed");
  Rk45Stats stats;
  if (t1 == t0) return stats;

  const long n = y.size();
  Eigen::VectorXcd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n),
      ynew(n), yerr(n);

  double t = t0;
  rhs(y, k1);

  // Initial step from the usual ||y|| / ||f|| heuristic.
  double span = t1 - t0;
  double fn = k1.norm(), yn = y.norm();
  double h = (fn > 0) ? 0.01 * std::max(yn, 1e-30) / fn : span / 100.0;
  h = std::min(h, span);
  if (opts.max_step > 0) h = std::min(h, opts.max_step);

  const double h_floor = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(t0), std::abs(t1));

  while (t < t1) {
    h = std::min(h, t1 - t);
    if (h <= h_floor && t1 - t > 2 * h_floor) {
      std::ostringstream msg;
      msg << "step size underflow at t = " << t << " (target " << t1 << ")";
      throw IntegratorError(msg.str());
    }
    if (stats.accepted + stats.rejected > opts.max_steps) {
      std::ostringstream msg;
      msg << "step budget exhausted at t = " << t << " (target " << t1 << ")";
      throw IntegratorError(msg.str());
    }

    ytmp = y + h * a21 * k1;
    rhs(ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(ynew, k7);
    yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    // Weighted RMS error against a per-component scale.
    double err_sq = 0;
    for (long i = 0; i < n; ++i) {
      double sc = opts.abs_tol +
                  opts.rel_tol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      double e = std::abs(yerr(i)) / sc;
      err_sq += e * e;
    }
    double err = std::sqrt(err_sq / n);

    if (err <= 1.0) {
      t += h;
      y.swap(ynew);
      if (post_step) {
        post_step(y);
        rhs(y, k1);  // the hook may have nudged y; no FSAL reuse
      } else {
        k1.swap(k7);
      }
      ++stats.accepted;
    } else {
      ++stats.rejected;
    }

    double factor = (err > 0) ? 0.9 * std::pow(err, -0.2) : 5.0;
    factor = std::clamp(factor, 0.2, 5.0);
    h *= factor;
    if (opts.max_step > 0) h = std::min(h, opts.max_step);
    if (!std::isfinite(err)) {
      std::ostringstream msg;
      msg << "non-finite state at t = " << t << " (target " << t1 << ")";
      throw IntegratorError(msg.str());
    }
  }
  return stats;
}

}  // namespace catstab
