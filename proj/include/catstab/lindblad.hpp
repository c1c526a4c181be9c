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
// Lindblad master-equation dynamics: dissipators, Liouvillians (as matrix-free
// applies and as sparse superoperators), time propagation for stiff and
// non-stiff regimes, and steady-state extraction.
//
// Vectorization convention: row-major, vec(rho)[i*D + j] = rho(i, j), so that
// A rho B <-> (A kron B^T) vec(rho) and the Hamiltonian part of the
// superoperator is -i (H kron I - I kron H^T).

#ifndef CATSTAB_LINDBLAD_HPP
#define CATSTAB_LINDBLAD_HPP

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "catstab/fock.hpp"

namespace catstab {

using SparseSuperOp = Eigen::SparseMatrix<Complex>;

struct CollapseTerm {
  double rate = 0.0;  // nonnegative, angular-frequency units
  Operator op;
};

struct LindbladModel {
  Operator hamiltonian;
  std::vector<CollapseTerm> collapse_terms;

  const ModeLayout& layout() const { return hamiltonian.layout; }
  // Throws on negative rates or layout mismatches between terms.
  void validate() const;
  // Largest collapse rate; 1.0 when there is none (used for unit scaling).
  double max_rate() const;
};

enum class PropagatorMethod {
  automatic,
  explicit_adaptive,
  krylov_exponential,
  dense_exponential,
};

struct PropagatorPlan {
  PropagatorMethod method = PropagatorMethod::automatic;
  double rel_tol = 1e-8;
  double max_step = 1.0;  // units of 1/max_rate; explicit-adaptive only
  int krylov_dim = 30;
  bool store_snapshots = false;
};

struct TimeSeries {
  std::vector<double> times;
  std::vector<std::string> names;
  // columns[k][i] = observable k at times[i].
  std::vector<std::vector<double>> columns;
  std::vector<DensityMatrix> snapshots;  // filled when requested by the plan

  const std::vector<double>& column(const std::string& name) const;
  // RFC-4180 CSV: header "time,<name>,...", CRLF line endings.
  void to_csv(std::ostream& out) const;
  // {"times": [...], "observables": {name: [...]}}
  std::string to_json() const;
};

struct Observer {
  std::string name;
  std::function<double(const DensityMatrix&)> fn;
};

// D(op) rho = op rho op^dag - 1/2 {op^dag op, rho}.
Eigen::MatrixXcd dissipator_apply(const Operator& op,
                                  const Eigen::MatrixXcd& rho);

// -i[H, rho] + sum rate * D(op) rho.
Eigen::MatrixXcd liouvillian_apply(const LindbladModel& model,
                                   const Eigen::MatrixXcd& rho);

// Sparse superoperator L with vec(d rho/dt) = L vec(rho) in the row-major
// convention above.  Refuses layouts with total dimension beyond `dim_cap`
// (CapacityError naming the memory that would be needed).
SparseSuperOp assemble_liouvillian_matrix(const LindbladModel& model,
                                          long dim_cap = 400);

// Row-major flattening helpers matching the superoperator convention.
Eigen::VectorXcd vec_density(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd unvec_density(const Eigen::VectorXcd& v, long dim);

// Propagates rho0 across t_grid (strictly increasing; rho0 is the state at
// t_grid[0]) and records every observer at every grid time.  Accepted
// integrator steps re-symmetrize the state.  Method `automatic` picks the
// dense exponential for total dimension <= 40 and Krylov above.
TimeSeries evolve(const LindbladModel& model, const DensityMatrix& rho0,
                  const std::vector<double>& t_grid, const PropagatorPlan& plan,
                  const std::vector<Observer>& observers);

enum class SteadyStateMethod { automatic, null_space, long_time };

// Stationary state with ||liouvillian_apply(rho_ss)||_max <= 1e-7 * max rate.
// The null-space path (default for total dimension <= 120) runs shifted
// inverse iteration on a small block and reports a DegenerateSteadyStateError
// when more than one stationary direction is found (e.g. the parity-preserving
// pure two-photon model).  The long-time path cannot detect degeneracy; it
// returns the mixture it converges to.
DensityMatrix steady_state(const LindbladModel& model,
                           SteadyStateMethod method =
                               SteadyStateMethod::automatic);

}  // namespace catstab

#endif  // CATSTAB_LINDBLAD_HPP
