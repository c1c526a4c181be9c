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
// Independent cross-check of the adiabatic elimination behind the engineered
// parity-selection rate.  The joint storage/readout-2 state is expanded in
// powers of delta = g_ps / kappa_r2, keeping readout levels |0>, |1>, |2>:
//
//   rho_joint = rho00 |0><0|  +  delta (rho01 |0><1| + rho10 |1><0|)
//             + delta^2 (rho11 |1><1| + rho20 |2><0| + rho02 |0><2|) + ...
//
// The six storage-space blocks close on themselves; integrating them directly
// and fitting the decay of the |2n~+1> storage population gives a rate that
// can be compared against the closed form
//
//   kappa_ps / kappa_r2 = 4 delta^2 (2n~+1) / (1 + 4 delta^2 (2n~+1)),
//
// which is the steady-state (slaved) solution of the same block system.  The
// comparison validates the formula -- and locates its domain of validity --
// without going through the Lindblad machinery.

#ifndef CATSTAB_REDUCTION_HPP
#define CATSTAB_REDUCTION_HPP

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "catstab/lindblad.hpp"
#include "catstab/models.hpp"

namespace catstab {

// Storage level dressing the second-order couplings (the terms that move the
// second readout excitation).
//
//   descending  the transfer ladder of two_mode_reduced_model: the second
//               readout photon appears while the storage steps from |2n~>
//               down to |2n~-1>.  This is the variant consistent with the
//               two-mode model and the one the decay-rate validation uses.
//   ascending   couplings dressed with the level above the pair (|2n~+2>
//               stepping down to |2n~+1>).  From the canonical initial state
//               the second-order blocks then stay dark, which isolates the
//               two-level sector exactly; the slaved-block formulas below are
//               stationary points of this variant.
enum class CascadeLadder { descending, ascending };

// The six expansion blocks, each acting on the storage space alone.  Time is
// measured in units of 1/kappa_r2 (tau).
struct CascadeState {
  Eigen::MatrixXcd rho00, rho11, rho01, rho10, rho20, rho02;
  double delta = 0.0;  // g_ps / kappa_r2
  int n_tilde = 2;
  double tau = 0.0;
  CascadeLadder ladder = CascadeLadder::descending;

  int storage_dim() const { return static_cast<int>(rho00.rows()); }

  // All blocks square with one common dimension >= 2 n~ + 3; rho00 and rho11
  // Hermitian, rho01 = rho10^dag and rho02 = rho20^dag, all within 1e-10.
  void validate() const;

  // Tr rho00 + delta^2 Tr rho11.  Conserved exactly by the block flow (the
  // second-order blocks are traceless coherences and carry no population).
  double total_population() const;

  // All-zero blocks.  dim = 0 picks the minimal dimension 2 n~ + 3: the two
  // levels of interest plus the neighbors the couplings reference.
  static CascadeState zero(int n_tilde, double delta, int dim = 0);

  // `population` in storage level |2 n~ + 1> of rho00, everything else zero.
  static CascadeState upper_level(int n_tilde, double delta,
                                  double population = 1.0, int dim = 0);
};

// Time derivative d(blocks)/dtau at fixed delta.  Throws InvalidArgumentError
// when the storage dimension is below 2 n~ + 3 or the blocks disagree in
// shape.  The returned state carries the same delta/n_tilde/ladder/tau.
CascadeState cascade_rhs(const CascadeState& state);

// Integrates the block system from `initial` (at tau = initial.tau) forward
// to tau_end, recording `samples` evenly spaced points including both
// endpoints.  Columns:
//   pop_upper   <2n~+1| rho00 |2n~+1>
//   pop_lower   <2n~|   rho00 |2n~>
//   total       Tr rho00 + delta^2 Tr rho11    (conserved)
// `times` holds tau.  The state at tau_end is written to *final_state when
// given.  Throws InvalidArgumentError on samples < 2 or tau_end <= initial
// tau, IntegratorError when the step control fails.
TimeSeries integrate_cascade(const CascadeState& initial, double tau_end,
                             int samples, CascadeState* final_state = nullptr,
                             double rel_tol = 1e-10);

// Steady-state values of the fast variables in the {|2n~>, |2n~+1>} sector,
// slaved to a frozen slow block rho00 (only rho00, delta and n_tilde of
// `state` are read).  Naming: *_upper / *_lower are diagonal elements at
// storage levels 2n~+1 / 2n~; bar10 = <2n~|rho10|2n~+1> and
// barbar01 = <2n~+1|rho01|2n~>.  Solving the chain self-consistently gives
//
//   rho11_upper = 0,            rho01_upper = rho10_upper = 0,
//   rho11_lower = 4 (2n~+1) x / (1 + 4 delta^2 (2n~+1)),
//   rho01_lower = 2i sqrt(2n~+1) <2n~|rho00|2n~+1>,
//   rho10_lower = -2i sqrt(2n~+1) <2n~+1|rho00|2n~>,
//   bar10 = -barbar01 = -2i sqrt(2n~+1) (x - delta^2 rho11_lower),
//
// with x = <2n~+1|rho00|2n~+1>.
struct BlockSteadyValues {
  Complex rho11_upper;
  Complex rho01_upper;
  Complex rho10_upper;
  Complex rho11_lower;
  Complex rho01_lower;
  Complex rho10_lower;
  Complex bar10;
  Complex barbar01;
};
BlockSteadyValues block_steady_states(const CascadeState& state);

// Copy of `state` whose fast blocks carry the slaved values above (all other
// fast entries zero).  When rho00 is supported on the {|2n~>, |2n~+1>}
// sector, plugging the result into cascade_rhs leaves every fast block
// stationary under the `ascending` ladder; under `descending` the first-order
// blocks are still stationary but rho20/rho02 pick up a drive from the
// embedded coherences.  In both cases the net sector population is conserved:
// d(pop_upper + pop_lower)/dtau = 0.
CascadeState embed_steady_blocks(const CascadeState& state);

// One decay-rate cross-check at a given delta: integrate the block system
// from pure |2n~+1> population, least-squares fit the log of pop_upper after
// the fast transient (window from tau = 5, five fast lifetimes, until the
// population first drops below 1e-6), and compare the fitted slope with the
// closed-form rate.  Rates in units of kappa_r2.
struct DecayFit {
  double delta = 0.0;
  int n_tilde = 0;
  double fitted_rate = 0.0;
  double formula_rate = 0.0;
  // |fitted - formula| / formula (absolute difference when the formula rate
  // vanishes, i.e. at delta = 0).
  double relative_error = 0.0;
};

// `initial_population` only rescales the initial data; the fitted rate is
// invariant under it (the flow is linear).
DecayFit fit_decay_rate(double delta, int n_tilde,
                        double initial_population = 1.0,
                        CascadeLadder ladder = CascadeLadder::descending);

// fit_decay_rate across a grid of deltas, parallelized over grid points.
std::vector<DecayFit> fit_decay_rates(const std::vector<double>& deltas,
                                      int n_tilde);

// RFC-4180 CSV with CRLF line endings and header
// delta,n_tilde,fitted_rate,formula_rate,relative_error.
void decay_fits_to_csv(const std::vector<DecayFit>& fits, std::ostream& out);

// Full three-mode model against the single-mode effective model carrying the
// mapped rates (kappa_2ph = 4 g_2ph^2/kappa_r1, the closed-form kappa_ps, and
// the calibrated two-photon drive), both started from vacuum and scored by
// fidelity to the cat state the drive calibration targets.  The three-mode
// state is reduced to the storage mode before scoring.  Column "fidelity" in
// both series.
struct ModelComparison {
  TimeSeries three_mode;
  TimeSeries effective;
  double max_abs_gap = 0.0;
};

ModelComparison compare_models(const ThreeModeParams& params,
                               const std::vector<double>& t_grid,
                               const PropagatorPlan& plan = {});

}  // namespace catstab

#endif  // CATSTAB_REDUCTION_HPP
