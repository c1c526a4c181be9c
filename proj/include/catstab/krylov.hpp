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
// Krylov-subspace approximation of w = exp(t A) v for large sparse A,
// with adaptive substepping and a posteriori error control in the style
// of widely used exponential-propagation codes.

#ifndef CATSTAB_KRYLOV_HPP
#define CATSTAB_KRYLOV_HPP

#include <functional>

#include <Eigen/Dense>

namespace catstab {

using ApplyFn = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

struct ExpvOptions {
  int krylov_dim = 30;     // Arnoldi basis size m
  double tol = 1e-8;       // error per unit time, relative to the input norm
  double anorm = 1.0;      // estimate of ||A|| (sets the initial substep)
  long max_substeps = 5'000'000;
  // Invoked on the state after every accepted substep (e.g. symmetrization).
  std::function<void(Eigen::VectorXcd&)> post_substep;
};

struct ExpvStats {
  long substeps = 0;
  long matvecs = 0;
  long rejections = 0;
};

// Overwrites v with exp(t A) v.  t must be >= 0 (the Liouvillians handled
// here generate forward-in-time semigroups).  Throws IntegratorError if the
// step controller stalls.
ExpvStats expv(const ApplyFn& apply, double t, Eigen::VectorXcd& v,
               const ExpvOptions& opts = {});

}  // namespace catstab

#endif  // CATSTAB_KRYLOV_HPP
