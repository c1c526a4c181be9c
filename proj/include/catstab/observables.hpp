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
//
// Scalar observables and phase-space distributions of density matrices.

#ifndef CATSTAB_OBSERVABLES_HPP
#define CATSTAB_OBSERVABLES_HPP

#include <iosfwd>

#include "catstab/fock.hpp"

namespace catstab {

// <target| rho |target>, clipped to [0, 1].  Deviations beyond 1e-8 outside
// that interval (a sign of an unphysical rho) emit a warning before clipping.
double fidelity(const DensityMatrix& rho, const StateVector& target);

// The next three require a single-mode layout; multi-mode callers
// partial-trace first.
double mean_parity(const DensityMatrix& rho);
Eigen::VectorXd photon_pmf(const DensityMatrix& rho);
double mean_photon(const DensityMatrix& rho);

struct WignerGridSpec {
  double x_min = -4.0, x_max = 4.0;
  int nx = 81;
  double p_min = -4.0, p_max = 4.0;
  int np = 81;
  // Minimum number of extra Fock levels appended during displacement.  The
  // working dimension is grown further, automatically, until the state
  // displaced to the far corner of the grid fits with negligible tail loss.
  int pad = 10;
  // Hard ceiling on the working dimension (0 = default ceiling of 1024).
  // If the ceiling cuts below what the grid extent requires, far-field
  // values degrade and the truncation warning fires.
  int max_dim = 0;
};

struct WignerGrid {
  Eigen::VectorXd x_axis;  // size nx
  Eigen::VectorXd p_axis;  // size np
  // values(i, j) = W(x_axis(i), p_axis(j)).
  Eigen::MatrixXd values;

  double min_value() const { return values.minCoeff(); }
  // W at the grid point nearest to the origin.
  double at_origin() const;
  // Rectangle-rule integral over the grid.
  double integral() const;
  // CSV rows "x,p,w" with CRLF endings.
  void to_csv(std::ostream& out) const;
};

// W(x + i p) = (2/pi) Tr[D(beta) rho D(beta)^dag P], evaluated over the grid.
// Real part is returned; an imaginary residue above 1e-10 warns.  Rows of the
// grid are computed in parallel.
WignerGrid wigner(const DensityMatrix& rho, const WignerGridSpec& spec = {});

}  // namespace catstab

#endif  // CATSTAB_OBSERVABLES_HPP
