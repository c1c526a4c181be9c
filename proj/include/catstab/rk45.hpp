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
// Adaptive Dormand-Prince 5(4) for autonomous complex linear systems.

#ifndef CATSTAB_RK45_HPP
#define CATSTAB_RK45_HPP

#include <functional>

#include <Eigen/Dense>

namespace catstab {

// dy/dt = rhs(y); rhs writes into its second argument.
using RhsFn = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;
// Called on y after every accepted step (e.g. to re-symmetrize a density
// matrix flattened into y).
using PostStepFn = std::function<void(Eigen::VectorXcd&)>;

struct Rk45Options {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0 = unlimited
  long max_steps = 50'000'000;
};

struct Rk45Stats {
  long accepted = 0;
  long rejected = 0;
};

// Integrates y from t0 to t1 in place.  Throws IntegratorError (message
// includes the time reached) on step-size underflow or step-budget overrun.
Rk45Stats rk45_integrate(const RhsFn& rhs, Eigen::VectorXcd& y, double t0,
                         double t1, const Rk45Options& opts = {},
                         const PostStepFn& post_step = nullptr);

}  // namespace catstab

#endif  // CATSTAB_RK45_HPP
