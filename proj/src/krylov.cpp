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

#include "catstab/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "catstab/errors.hpp"

namespace catstab {

namespace {

// Two significant digits; keeps substep sequences stable under float jitter.
double round_step(double tau) {
  if (tau <= 0) return tau;
  double p = std::floor(std::log10(tau));
  double s = std::pow(10.0, p - 1);
  return std::round(tau / s) * s;
}

}  // namespace

ExpvStats expv(const ApplyFn& apply, double t, Eigen::VectorXcd& v,
               const ExpvOptions& opts) {
  ExpvStats stats;
  if (t < 0) throw IntegratorError("expv requires t >= 0");
  if (t == 0) return stats;

  const long n = v.size();
  const int m =
      std::max<int>(2, static_cast<int>(std::min<long>(opts.krylov_dim, n - 1)));
  const double gamma = 0.9, delta = 1.2;
  const double anorm = std::max(opts.anorm, 1e-300);

  double beta = v.norm();
  if (beta == 0) return stats;
  const double tol = std::max(opts.tol, 1e-15) * beta;  // per unit time

  // Initial substep in the usual style: from the leading Taylor remainder of
  // an order-m approximation at unit norm.
  double xm = 1.0 / m;
  double fact = std::pow((m + 1) / std::numbers::e, m + 1) *
                std::sqrt(2 * std::numbers::pi * (m + 1));
  double tau =
      (1.0 / anorm) * std::pow(fact * tol / (4.0 * beta * anorm), xm);
  tau = round_step(std::min(tau, t));

  Eigen::MatrixXcd V(n, m + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 2, m + 2);
  Eigen::VectorXcd w(n), coeff;

  double t_now = 0;
  while (t_now < t) {
    tau = std::min(tau, t - t_now);
    V.col(0) = v / beta;
    H.setZero();

    bool happy = false;
    int mb = m;
    double avnorm = 0;
    for (int j = 0; j < m; ++j) {
      apply(V.col(j), w);
      ++stats.matvecs;
      double wnorm = w.norm();
      // Classical Gram-Schmidt, twice.
      Eigen::VectorXcd h1 = V.leftCols(j + 1).adjoint() * w;
      w.noalias() -= V.leftCols(j + 1) * h1;
      Eigen::VectorXcd h2 = V.leftCols(j + 1).adjoint() * w;
      w.noalias() -= V.leftCols(j + 1) * h2;
      H.block(0, j, j + 1, 1) = h1 + h2;
      double s = w.norm();
      if (s <= 1e-12 * wnorm || wnorm == 0.0) {
        happy = true;  // invariant subspace: the small exponential is exact
        mb = j + 1;
        tau = t - t_now;
        break;
      }
      H(j + 1, j) = s;
      V.col(j + 1) = w / s;
    }
    if (!happy) {
      apply(V.col(m), w);
      ++stats.matvecs;
      avnorm = w.norm();
      H(m + 1, m) = 1.0;  // augmented column for the error estimate
    }

    int mx = happy ? mb : m + 2;
    double err_loc = tol * tau;
    int ireject = 0;
    Eigen::MatrixXcd F;
    for (;;) {
      F = (tau * H.topLeftCorner(mx, mx)).exp();
      if (happy) {
        err_loc = 0;
        break;
      }
      double phi1 = std::abs(beta * F(m, 0));
      double phi2 = std::abs(beta * F(m + 1, 0)) * avnorm;
      if (phi1 > 10 * phi2) {
        err_loc = phi2;
        xm = 1.0 / m;
      } else if (phi1 > phi2) {
        err_loc = phi1 * phi2 / (phi1 - phi2);
        xm = 1.0 / m;
      } else {
        err_loc = phi1;
        xm = 1.0 / (m - 1);
      }
      if (err_loc <= delta * tau * tol) break;
      tau = round_step(gamma * tau * std::pow(tau * tol / err_loc, xm));
      if (++ireject > 12) {
        std::ostringstream msg;
        msg << "Krylov step controller stalled at t = " << t_now
            << " (target " << t << ", last local error " << err_loc << ")";
        throw IntegratorError(msg.str());
      }
      ++stats.rejections;
    }

    int cols = happy ? mb : m + 1;
    coeff = F.block(0, 0, cols, 1);
    v.noalias() = V.leftCols(cols) * (beta * coeff);
    if (opts.post_substep) opts.post_substep(v);
    beta = v.norm();
    t_now += tau;
    ++stats.substeps;
    if (stats.substeps > opts.max_substeps) {
      std::ostringstream msg;
      msg << "substep budget exhausted at t = " << t_now << " (target " << t
          << ")";
      throw IntegratorError(msg.str());
    }

    if (!happy) {
      double tau_new =
          gamma * tau * std::pow(tau * tol / std::max(err_loc, 1e-300), xm);
      tau = round_step(std::clamp(tau_new, 0.2 * tau, 5.0 * tau));
    }
  }
  return stats;
}

}  // namespace catstab
