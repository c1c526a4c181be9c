// Copyright 2026 The Catstab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "catstab/reduction.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "catstab/errors.hpp"
#include "catstab/fock.hpp"
#include "catstab/models.hpp"
#include "catstab/observables.hpp"
#include "catstab/parallel.hpp"
#include "catstab/rk45.hpp"

namespace catstab {

namespace {

constexpr double kPairTol = 1e-10;
constexpr Complex kImag{0.0, 1.0};

// a Pi_{level}: the single matrix element sqrt(level) |level-1><level| of the
// storage annihilation operator restricted to one Fock level.  For level 0 the
// product vanishes identically.
Eigen::MatrixXcd lower_from(int level, int dim) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  if (level > 0) m(level - 1, level) = std::sqrt(static_cast<double>(level));
  return m;
}

// Storage level whose annihilation element dresses the second-excitation
// couplings.  The descending convention takes it one level below the swap
// level 2*n_tilde + 1, matching the pair-exchange interaction in which each
// readout excitation accompanies one storage photon removed; the ascending
// convention takes it one level above.
int second_order_level(int n_tilde, CascadeLadder ladder) {
  return ladder == CascadeLadder::ascending ? 2 * n_tilde + 2 : 2 * n_tilde;
}

double hermitian_defect(const Eigen::MatrixXcd& m) {
  return (m - m.adjoint().eval()).cwiseAbs().maxCoeff();
}

double pairing_defect(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b.adjoint().eval()).cwiseAbs().maxCoeff();
}

long block_count(int dim) { return 6L * dim * dim; }

Eigen::VectorXcd flatten(const CascadeState& s) {
  const int d = s.storage_dim();
  const Eigen::MatrixXcd* blocks[] = {&s.rho00, &s.rho11, &s.rho01,
                                      &s.rho10, &s.rho20, &s.rho02};
  Eigen::VectorXcd y(block_count(d));
  long offset = 0;
  for (const Eigen::MatrixXcd* block : blocks) {
    y.segment(offset, d * d) =
        Eigen::Map<const Eigen::VectorXcd>(block->data(), d * d);
    offset += d * d;
  }
  return y;
}

void unflatten(const Eigen::VectorXcd& y, CascadeState& s) {
  const int d = s.storage_dim();
  Eigen::MatrixXcd* blocks[] = {&s.rho00, &s.rho11, &s.rho01,
                                &s.rho10, &s.rho20, &s.rho02};
  long offset = 0;
  for (Eigen::MatrixXcd* block : blocks) {
    *block = Eigen::Map<const Eigen::MatrixXcd>(y.data() + offset, d, d);
    offset += d * d;
  }
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

}  // namespace

void CascadeState::validate() const {
  if (n_tilde < 0) {
    throw InvalidArgumentError("cascade state: n_tilde must be nonnegative, got " +
                               std::to_string(n_tilde));
  }
  if (delta < 0.0) {
    throw InvalidArgumentError("cascade state: delta must be nonnegative, got " +
                               format_double(delta));
  }
  const int d = storage_dim();
  const int min_dim = 2 * n_tilde + 3;
  if (d < min_dim) {
    throw InvalidArgumentError(
        "cascade state: storage dimension " + std::to_string(d) +
        " is below the minimum " + std::to_string(min_dim) +
        " (= 2 n_tilde + 3) needed to hold the swap level and one level above");
  }
  const Eigen::MatrixXcd* blocks[] = {&rho00, &rho11, &rho01,
                                      &rho10, &rho20, &rho02};
  const char* names[] = {"rho00", "rho11", "rho01", "rho10", "rho20", "rho02"};
  for (int i = 0; i < 6; ++i) {
    if (blocks[i]->rows() != d || blocks[i]->cols() != d) {
      throw InvalidArgumentError(
          std::string("cascade state: block ") + names[i] + " is " +
          std::to_string(blocks[i]->rows()) + "x" +
          std::to_string(blocks[i]->cols()) + " but rho00 is " +
          std::to_string(d) + "x" + std::to_string(d));
    }
  }
  const double h00 = hermitian_defect(rho00);
  if (h00 > kPairTol) {
    throw InvalidArgumentError("cascade state: rho00 must be Hermitian (defect " +
                               format_double(h00) + ")");
  }
  const double h11 = hermitian_defect(rho11);
  if (h11 > kPairTol) {
    throw InvalidArgumentError("cascade state: rho11 must be Hermitian (defect " +
                               format_double(h11) + ")");
  }
  const double p01 = pairing_defect(rho01, rho10);
  if (p01 > kPairTol) {
    throw InvalidArgumentError(
        "cascade state: rho01 must equal the adjoint of rho10 (defect " +
        format_double(p01) + ")");
  }
  const double p02 = pairing_defect(rho02, rho20);
  if (p02 > kPairTol) {
    throw InvalidArgumentError(
        "cascade state: rho02 must equal the adjoint of rho20 (defect " +
        format_double(p02) + ")");
  }
}

double CascadeState::total_population() const {
  return (rho00.trace() + delta * delta * rho11.trace()).real();
}

CascadeState CascadeState::zero(int n_tilde, double delta, int dim) {
  if (n_tilde < 0) {
    throw InvalidArgumentError("cascade state: n_tilde must be nonnegative, got " +
                               std::to_string(n_tilde));
  }
  if (delta < 0.0) {
    throw InvalidArgumentError("cascade state: delta must be nonnegative, got " +
                               format_double(delta));
  }
  const int min_dim = 2 * n_tilde + 3;
  if (dim == 0) dim = min_dim;
  if (dim < min_dim) {
    throw InvalidArgumentError(
        "cascade state: requested storage dimension " + std::to_string(dim) +
        " is below the minimum " + std::to_string(min_dim) +
        " (= 2 n_tilde + 3)");
  }
  CascadeState s;
  s.delta = delta;
  s.n_tilde = n_tilde;
  s.rho00 = Eigen::MatrixXcd::Zero(dim, dim);
  s.rho11 = Eigen::MatrixXcd::Zero(dim, dim);
  s.rho01 = Eigen::MatrixXcd::Zero(dim, dim);
  s.rho10 = Eigen::MatrixXcd::Zero(dim, dim);
  s.rho20 = Eigen::MatrixXcd::Zero(dim, dim);
  s.rho02 = Eigen::MatrixXcd::Zero(dim, dim);
  return s;
}

CascadeState CascadeState::upper_level(int n_tilde, double delta,
                                       double population, int dim) {
  CascadeState s = zero(n_tilde, delta, dim);
  const int top = 2 * n_tilde + 1;
  s.rho00(top, top) = population;
  return s;
}

CascadeState cascade_rhs(const CascadeState& state) {
  state.validate();
  const int d = state.storage_dim();
  const int top = 2 * state.n_tilde + 1;
  const Eigen::MatrixXcd a_swap = lower_from(top, d);
  const Eigen::MatrixXcd a_second =
      lower_from(second_order_level(state.n_tilde, state.ladder), d);
  const Eigen::MatrixXcd a_swap_dag = a_swap.adjoint();
  const Eigen::MatrixXcd a_second_dag = a_second.adjoint();
  const double dd = state.delta * state.delta;
  const double rt2 = std::sqrt(2.0);

  CascadeState out = state;
  out.rho00 = -kImag * dd *
                  (a_swap_dag * state.rho10 - state.rho01 * a_swap) +
              dd * Eigen::MatrixXcd(state.rho11.diagonal().asDiagonal());
  out.rho11 =
      -kImag * (a_swap * state.rho01 - state.rho10 * a_swap_dag) - state.rho11;
  out.rho01 = -kImag * (dd * a_swap_dag * state.rho11 -
                        state.rho00 * a_swap_dag -
                        rt2 * dd * state.rho02 * a_second) -
              0.5 * state.rho01;
  out.rho10 = -kImag * (a_swap * state.rho00 +
                        rt2 * dd * a_second_dag * state.rho20 -
                        dd * state.rho11 * a_swap) -
              0.5 * state.rho10;
  out.rho20 = -kImag * rt2 * a_second * state.rho10 - state.rho20;
  out.rho02 = kImag * rt2 * state.rho01 * a_second_dag - state.rho02;
  return out;
}

TimeSeries integrate_cascade(const CascadeState& initial, double tau_end,
                             int samples, CascadeState* final_state,
                             double rel_tol) {
  initial.validate();
  if (samples < 2) {
    throw InvalidArgumentError("integrate_cascade: need at least 2 samples, got " +
                               std::to_string(samples));
  }
  if (!(tau_end > initial.tau)) {
    throw InvalidArgumentError(
        "integrate_cascade: tau_end (" + format_double(tau_end) +
        ") must exceed the initial tau (" + format_double(initial.tau) + ")");
  }
  const int top = 2 * initial.n_tilde + 1;

  // The right-hand side never changes the block shapes, so one working state
  // is reused for every evaluation.
  CascadeState work = initial;
  Eigen::VectorXcd y = flatten(initial);
  const RhsFn rhs = [&work](const Eigen::VectorXcd& v, Eigen::VectorXcd& dv) {
    unflatten(v, work);
    dv = flatten(cascade_rhs(work));
  };
  Rk45Options opts;
  opts.rel_tol = rel_tol;
  opts.abs_tol = 1e-13;

  TimeSeries series;
  series.names = {"pop_upper", "pop_lower", "total"};
  series.columns.assign(3, {});
  const auto record = [&](double tau) {
    unflatten(y, work);
    work.tau = tau;
    series.times.push_back(tau);
    series.columns[0].push_back(work.rho00(top, top).real());
    series.columns[1].push_back(work.rho00(top - 1, top - 1).real());
    series.columns[2].push_back(work.total_population());
  };

  record(initial.tau);
  const double span = tau_end - initial.tau;
  for (int k = 1; k < samples; ++k) {
    const double t0 = initial.tau + span * (k - 1) / (samples - 1);
    const double t1 =
        k == samples - 1 ? tau_end : initial.tau + span * k / (samples - 1);
    rk45_integrate(rhs, y, t0, t1, opts);
    record(t1);
  }
  if (final_state != nullptr) {
    *final_state = initial;
    unflatten(y, *final_state);
    final_state->tau = tau_end;
  }
  return series;
}

BlockSteadyValues block_steady_states(const CascadeState& state) {
  state.validate();
  const int top = 2 * state.n_tilde + 1;
  const double root = std::sqrt(static_cast<double>(top));
  const double dd = state.delta * state.delta;
  const Complex upper = state.rho00(top, top);
  const Complex cross = state.rho00(top - 1, top);
  const Complex cross_conj = state.rho00(top, top - 1);

  BlockSteadyValues v;
  // With rho00 frozen, the upper-level elements of the excited blocks decay
  // to zero: they are sourced only by each other, and the closed loop they
  // form is strictly contracting.
  v.rho11_upper = 0.0;
  v.rho01_upper = 0.0;
  v.rho10_upper = 0.0;
  v.rho11_lower = 4.0 * top * upper / (1.0 + 4.0 * dd * top);
  v.rho01_lower = 2.0 * kImag * root * cross;
  v.rho10_lower = -2.0 * kImag * root * cross_conj;
  v.bar10 = -2.0 * kImag * root * (upper - dd * v.rho11_lower);
  v.barbar01 = -v.bar10;
  return v;
}

CascadeState embed_steady_blocks(const CascadeState& state) {
  const BlockSteadyValues v = block_steady_states(state);
  CascadeState out = state;
  const int top = 2 * state.n_tilde + 1;
  out.rho11.setZero();
  out.rho01.setZero();
  out.rho10.setZero();
  out.rho20.setZero();
  out.rho02.setZero();
  out.rho11(top, top) = v.rho11_upper;
  out.rho11(top - 1, top - 1) = v.rho11_lower;
  out.rho01(top, top) = v.rho01_upper;
  out.rho01(top - 1, top - 1) = v.rho01_lower;
  out.rho01(top, top - 1) = v.barbar01;
  out.rho10(top, top) = v.rho10_upper;
  out.rho10(top - 1, top - 1) = v.rho10_lower;
  out.rho10(top - 1, top) = v.bar10;
  return out;
}

DecayFit fit_decay_rate(double delta, int n_tilde, double initial_population,
                        CascadeLadder ladder) {
  if (!(initial_population > 0.0)) {
    throw InvalidArgumentError(
        "fit_decay_rate: initial population must be positive, got " +
        format_double(initial_population));
  }
  DecayFit fit;
  fit.delta = delta;
  fit.n_tilde = n_tilde;
  // Closed-form pumping rate in swap-linewidth units (kappa_r2 = 1, so the
  // coupling argument is delta itself).
  fit.formula_rate = rate_kappa_ps(delta, 1.0, n_tilde);

  CascadeState initial =
      CascadeState::upper_level(n_tilde, delta, initial_population);
  initial.ladder = ladder;
  // Long enough for the population to drop well below the fit-window floor
  // when the closed form is accurate; a short fixed span when delta = 0.
  const double tau_end =
      fit.formula_rate > 0.0 ? 5.0 + 16.2 / fit.formula_rate : 10.0;
  const int samples = 2000;
  const TimeSeries series = integrate_cascade(initial, tau_end, samples,
                                              nullptr, 1e-10);
  const std::vector<double>& tau = series.times;
  const std::vector<double>& pop = series.column("pop_upper");

  // Least squares on the log of the population, skipping the initial
  // transient and stopping at the first sample below 1e-6 of the start so
  // the fit is invariant under rescaling of the initial population.
  const double floor = 1e-6 * initial_population;
  std::vector<double> t_window;
  std::vector<double> log_window;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] < 5.0) continue;
    if (!(pop[i] > floor)) break;
    t_window.push_back(tau[i]);
    log_window.push_back(std::log(pop[i]));
  }
  if (t_window.size() < 10) {
    throw IntegratorError(
        "fit_decay_rate: fewer than 10 usable samples in the fit window "
        "(delta " + format_double(delta) + ", n_tilde " +
        std::to_string(n_tilde) + ")");
  }
  const double n = static_cast<double>(t_window.size());
  double t_mean = 0.0;
  double l_mean = 0.0;
  for (std::size_t i = 0; i < t_window.size(); ++i) {
    t_mean += t_window[i];
    l_mean += log_window[i];
  }
  t_mean /= n;
  l_mean /= n;
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < t_window.size(); ++i) {
    numerator += (t_window[i] - t_mean) * (log_window[i] - l_mean);
    denominator += (t_window[i] - t_mean) * (t_window[i] - t_mean);
  }
  fit.fitted_rate = -numerator / denominator;
  fit.relative_error =
      fit.formula_rate > 0.0
          ? std::abs(fit.fitted_rate - fit.formula_rate) / fit.formula_rate
          : std::abs(fit.fitted_rate);
  return fit;
}

std::vector<DecayFit> fit_decay_rates(const std::vector<double>& deltas,
                                      int n_tilde) {
  std::vector<DecayFit> fits(deltas.size());
  parallel_for(static_cast<std::int64_t>(deltas.size()),
               [&](std::int64_t i) {
                 fits[static_cast<std::size_t>(i)] =
                     fit_decay_rate(deltas[static_cast<std::size_t>(i)],
                                    n_tilde);
               });
  return fits;
}

void decay_fits_to_csv(const std::vector<DecayFit>& fits, std::ostream& out) {
  out << "delta,n_tilde,fitted_rate,formula_rate,relative_error\r\n";
  for (const DecayFit& fit : fits) {
    out << format_double(fit.delta) << ',' << fit.n_tilde << ','
        << format_double(fit.fitted_rate) << ','
        << format_double(fit.formula_rate) << ','
        << format_double(fit.relative_error) << "\r\n";
  }
}

ModelComparison compare_models(const ThreeModeParams& params,
                               const std::vector<double>& t_grid,
                               const PropagatorPlan& plan) {
  if (params.layout.num_modes() != 3) {
    throw InvalidArgumentError(
        "compare_models: expected a three-mode layout (storage and two "
        "readout modes), got " + std::to_string(params.layout.num_modes()) +
        " modes");
  }

  // Target amplitude implied by the drive calibration.  With no
  // two-excitation coupling there is no calibrated amplitude, so the drive
  // must vanish too and the target degenerates to vacuum.
  Complex alpha = 0.0;
  Complex eps_2ph = 0.0;
  if (params.g_2ph > 0.0) {
    const DriveCalibration calibration =
        alpha_from_drive(params.eps_r1, params.g_2ph, params.kappa_r1);
    alpha = calibration.alpha;
    eps_2ph = calibration.eps_2ph;
  } else if (params.eps_r1 != 0.0) {
    throw InvalidArgumentError(
        "compare_models: eps_r1 is nonzero but g_2ph is zero, so no target "
        "amplitude is defined");
  }

  EffectiveParams effective_params;
  effective_params.kappa_1ph = params.kappa_1ph;
  effective_params.kappa_2ph =
      params.g_2ph > 0.0 ? rate_kappa_2ph(params.g_2ph, params.kappa_r1) : 0.0;
  effective_params.kappa_ps =
      params.g_ps > 0.0
          ? rate_kappa_ps(params.g_ps, params.kappa_r2, params.n_tilde)
          : 0.0;
  effective_params.eps_2ph = eps_2ph;
  effective_params.n_tilde = params.n_tilde;
  effective_params.target_parity = CatParity::even;

  const int storage_dim = params.layout.dim(0);
  const StateVector target = cat_state(alpha, CatParity::even, storage_dim);

  ModelComparison result;
  {
    const LindbladModel full = three_mode_model(params);
    Eigen::VectorXcd amplitudes =
        Eigen::VectorXcd::Zero(params.layout.total());
    amplitudes(0) = 1.0;
    const DensityMatrix initial =
        DensityMatrix::from_pure(StateVector{params.layout, amplitudes});
    const Observer fidelity_observer{
        "fidelity", [&target](const DensityMatrix& rho) {
          return fidelity(partial_trace(rho, {0}), target);
        }};
    result.three_mode = evolve(full, initial, t_grid, plan,
                               {fidelity_observer});
  }
  {
    const LindbladModel reduced =
        effective_model(effective_params, storage_dim);
    const DensityMatrix initial =
        DensityMatrix::from_pure(fock_state(0, storage_dim));
    const Observer fidelity_observer{
        "fidelity", [&target](const DensityMatrix& rho) {
          return fidelity(rho, target);
        }};
    result.effective = evolve(reduced, initial, t_grid, plan,
                              {fidelity_observer});
  }

  const std::vector<double>& full_curve = result.three_mode.column("fidelity");
  const std::vector<double>& reduced_curve =
      result.effective.column("fidelity");
  double gap = 0.0;
  for (std::size_t i = 0; i < full_curve.size(); ++i) {
    gap = std::max(gap, std::abs(full_curve[i] - reduced_curve[i]));
  }
  result.max_abs_gap = gap;
  return result;
}

}  // namespace catstab
