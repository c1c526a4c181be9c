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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "catstab/errors.hpp"
#include "catstab/fock.hpp"
#include "catstab/models.hpp"
#include "catstab/reduction.hpp"
#include "catstab/warnings.hpp"

using namespace catstab;
using std::abs;

namespace frozen {
// Decay rates of the upper swap level fitted from high-accuracy reference
// integrations of the six-block cascade (descending convention, n~ = 2,
// canonical start in the upper level, fit protocol as in fit_decay_rate).
// The independent reference used an unrelated adaptive integrator at
// rtol 1e-10 / atol 1e-13; agreement here is required to 5e-4 relative.
constexpr double fitted_d002 = 0.0080120746;
constexpr double fitted_d012 = 0.2395696668;
constexpr double fitted_d040 = 0.3494947757;
// Same protocol with the ascending convention.
constexpr double fitted_d002_ascending = 0.0080650380;
// Denser grid of descending fits, delta = {0.02, 0.05, 0.1, 0.15, 0.2,
// 0.3, 0.4, 0.5}.
constexpr double fitted_grid[] = {0.00801207, 0.05029130, 0.18720606,
                                  0.28789068, 0.32250465, 0.34275578,
                                  0.34949478, 0.35227913};
}  // namespace frozen

namespace {

double max_abs(const Eigen::MatrixXcd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// A slow-block matrix supported on the two swap levels {2n~, 2n~+1}, with
// population on both levels and a coherence between them.
CascadeState sector_state(int n_tilde, double delta) {
  CascadeState s = CascadeState::zero(n_tilde, delta);
  const int top = 2 * n_tilde + 1;
  s.rho00(top, top) = 0.4;
  s.rho00(top - 1, top - 1) = 0.5;
  s.rho00(top - 1, top) = Complex{0.1, 0.03};
  s.rho00(top, top - 1) = Complex{0.1, -0.03};
  return s;
}

}  // namespace

TEST_CASE("cascade state factories and validation") {
  CascadeState s = CascadeState::zero(2, 0.1);
  CHECK(s.storage_dim() == 7);  // 2 n~ + 3
  CHECK(s.n_tilde == 2);
  CHECK(s.delta == doctest::Approx(0.1));
  CHECK_NOTHROW(s.validate());
  CHECK(s.total_population() == doctest::Approx(0.0));

  CascadeState u = CascadeState::upper_level(2, 0.1, 0.75, 9);
  CHECK(u.storage_dim() == 9);
  CHECK(u.rho00(5, 5).real() == doctest::Approx(0.75));
  CHECK(u.total_population() == doctest::Approx(0.75));
  CHECK_NOTHROW(u.validate());

  CHECK_THROWS_AS(CascadeState::zero(-1, 0.1), InvalidArgumentError);
  CHECK_THROWS_AS(CascadeState::zero(2, -0.2), InvalidArgumentError);
  CHECK_THROWS_AS(CascadeState::zero(2, 0.1, 6), InvalidArgumentError);

  // Shape mismatch between blocks.
  CascadeState bad = CascadeState::zero(2, 0.1);
  bad.rho20 = Eigen::MatrixXcd::Zero(6, 6);
  CHECK_THROWS_AS(bad.validate(), InvalidArgumentError);
  CHECK_THROWS_AS(cascade_rhs(bad), InvalidArgumentError);

  // Diagonal blocks must be Hermitian.
  CascadeState herm = CascadeState::zero(2, 0.1);
  herm.rho00(1, 2) = Complex{0.0, 0.5};
  CHECK_THROWS_AS(herm.validate(), InvalidArgumentError);

  // Off-diagonal blocks must come in adjoint pairs.
  CascadeState pair = CascadeState::zero(2, 0.1);
  pair.rho01(0, 1) = 0.3;
  CHECK_THROWS_AS(pair.validate(), InvalidArgumentError);
  pair.rho10(1, 0) = 0.3;
  CHECK_NOTHROW(pair.validate());
}

TEST_CASE("lower swap level is an exact fixed point") {
  for (CascadeLadder ladder :
       {CascadeLadder::descending, CascadeLadder::ascending}) {
    CascadeState s = CascadeState::zero(2, 0.37);
    s.ladder = ladder;
    s.rho00(4, 4) = 1.0;  // |2 n~><2 n~|
    const CascadeState rhs = cascade_rhs(s);
    CHECK(max_abs(rhs.rho00) <= 1e-15);
    CHECK(max_abs(rhs.rho11) <= 1e-15);
    CHECK(max_abs(rhs.rho01) <= 1e-15);
    CHECK(max_abs(rhs.rho10) <= 1e-15);
    CHECK(max_abs(rhs.rho20) <= 1e-15);
    CHECK(max_abs(rhs.rho02) <= 1e-15);
  }
}

TEST_CASE("isolated first-excitation population decays at unit rate") {
  // With no coupling and an empty ground block, the first-excitation block
  // obeys d rho11 / d tau = -rho11 exactly.
  CascadeState s = CascadeState::zero(2, 0.0);
  s.rho11(3, 3) = 1.0;

  const CascadeState rhs = cascade_rhs(s);
  CHECK(max_abs(rhs.rho11 + s.rho11) <= 1e-15);
  CHECK(max_abs(rhs.rho00) <= 1e-15);
  CHECK(max_abs(rhs.rho01) <= 1e-15);
  CHECK(max_abs(rhs.rho10) <= 1e-15);

  CascadeState final_state;
  integrate_cascade(s, 2.0, 41, &final_state);
  Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(7, 7);
  expected(3, 3) = std::exp(-2.0);
  CHECK(max_abs(final_state.rho11 - expected) <= 1e-9);
  CHECK(max_abs(final_state.rho00) <= 1e-12);
  CHECK(max_abs(final_state.rho01) <= 1e-12);
  CHECK(max_abs(final_state.rho20) <= 1e-12);
  CHECK(final_state.tau == doctest::Approx(2.0));
}

TEST_CASE("weighted total population is conserved") {
  for (double delta : {0.12, 0.4}) {
    CascadeState initial = CascadeState::upper_level(2, delta);
    const TimeSeries series = integrate_cascade(initial, 30.0, 301);
    const std::vector<double>& total = series.column("total");
    double lo = total.front();
    double hi = total.front();
    for (double v : total) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi - lo <= 1e-8);
    CHECK(total.front() == doctest::Approx(1.0));
  }
}

TEST_CASE("time evolution preserves the adjoint pairing") {
  CascadeState initial = CascadeState::upper_level(2, 0.12);
  CascadeState final_state;
  integrate_cascade(initial, 5.0, 51, &final_state);
  CHECK_NOTHROW(final_state.validate());
  // The upper population must have moved somewhere.
  CHECK(final_state.rho00(5, 5).real() < 1.0);
  CHECK(final_state.rho00(4, 4).real() > 0.0);
}

TEST_CASE("integration argument validation") {
  CascadeState initial = CascadeState::upper_level(2, 0.1);
  CHECK_THROWS_AS(integrate_cascade(initial, 1.0, 1), InvalidArgumentError);
  CHECK_THROWS_AS(integrate_cascade(initial, 0.0, 10), InvalidArgumentError);
  CHECK_THROWS_AS(integrate_cascade(initial, -1.0, 10), InvalidArgumentError);
}

TEST_CASE("slaved-block stationary values") {
  const double delta = 0.12;
  const int top = 5;
  const double root5 = std::sqrt(5.0);

  // Everything vanishes when the slow block has no weight on the swap levels.
  CascadeState empty = CascadeState::zero(2, delta);
  empty.rho00(1, 1) = 1.0;
  const BlockSteadyValues none = block_steady_states(empty);
  CHECK(abs(none.rho11_lower) <= 1e-15);
  CHECK(abs(none.rho01_lower) <= 1e-15);
  CHECK(abs(none.bar10) <= 1e-15);

  // Population on the upper swap level alone.
  const double x = 0.6;
  CascadeState upper = CascadeState::upper_level(2, delta, x);
  const BlockSteadyValues v = block_steady_states(upper);
  CHECK(abs(v.rho11_upper) <= 1e-15);
  CHECK(abs(v.rho01_upper) <= 1e-15);
  CHECK(abs(v.rho10_upper) <= 1e-15);
  const double y = 4.0 * (2 * 2 + 1) * x / (1.0 + 4.0 * delta * delta * 5.0);
  CHECK(v.rho11_lower.real() == doctest::Approx(y).epsilon(1e-12));
  CHECK(abs(v.rho11_lower.imag()) <= 1e-15);
  CHECK(abs(v.rho01_lower) <= 1e-15);  // no cross coherence in rho00
  const Complex expected_bar10 =
      Complex{0.0, -2.0 * root5} * (x - delta * delta * y);
  CHECK(abs(v.bar10 - expected_bar10) <= 1e-14);
  CHECK(abs(v.barbar01 + v.bar10) <= 1e-15);

  // A coherence between the swap levels drives the lower-level coherences.
  CascadeState with_cross = sector_state(2, delta);
  const Complex cross = with_cross.rho00(top - 1, top);
  const BlockSteadyValues w = block_steady_states(with_cross);
  CHECK(abs(w.rho01_lower - Complex{0.0, 2.0 * root5} * cross) <= 1e-14);
  CHECK(abs(w.rho10_lower - std::conj(w.rho01_lower)) <= 1e-14);
}

TEST_CASE("stationary embedding reproduces the closed-form pumping rate") {
  // At the embedded stationary point the slow populations obey
  //   d rho00[top] / d tau = -rate * rho00[top],
  //   d (rho00[top] + rho00[top-1]) / d tau = 0,
  // with the same closed-form rate returned by rate_kappa_ps.  The
  // first-excitation blocks are stationary; in the descending convention the
  // second-excitation block picks up a residual sourced one level below the
  // swap level, while in the ascending convention it stays dark.
  const int n_tilde = 2;
  const int top = 2 * n_tilde + 1;
  const double delta = 0.12;
  const double rate = rate_kappa_ps(delta, 1.0, n_tilde);

  for (CascadeLadder ladder :
       {CascadeLadder::descending, CascadeLadder::ascending}) {
    CascadeState base = sector_state(n_tilde, delta);
    base.ladder = ladder;
    const CascadeState embedded = embed_steady_blocks(base);
    CHECK_NOTHROW(embedded.validate());
    const CascadeState rhs = cascade_rhs(embedded);

    const double d_upper = rhs.rho00(top, top).real();
    const double d_lower = rhs.rho00(top - 1, top - 1).real();
    const double x = embedded.rho00(top, top).real();
    CHECK(abs(d_upper + rate * x) <= 1e-12);
    CHECK(abs(d_upper + d_lower) <= 1e-13);

    CHECK(max_abs(rhs.rho11) <= 1e-10);
    CHECK(max_abs(rhs.rho01) <= 1e-10);
    CHECK(max_abs(rhs.rho10) <= 1e-10);
    if (ladder == CascadeLadder::ascending) {
      CHECK(max_abs(rhs.rho20) <= 1e-10);
      CHECK(max_abs(rhs.rho02) <= 1e-10);
    } else {
      CHECK(max_abs(rhs.rho20) > 1e-3);
    }
  }
}

TEST_CASE("fitted decay rates match the frozen references") {
  const DecayFit f002 = fit_decay_rate(0.02, 2);
  CHECK(f002.fitted_rate ==
        doctest::Approx(frozen::fitted_d002).epsilon(5e-4));
  CHECK(f002.formula_rate == doctest::Approx(0.008 / 1.008).epsilon(1e-12));
  CHECK(f002.relative_error <= 0.02);

  const DecayFit f012 = fit_decay_rate(0.12, 2);
  CHECK(f012.fitted_rate ==
        doctest::Approx(frozen::fitted_d012).epsilon(5e-4));
  CHECK(f012.relative_error <= 0.10);

  // At delta = 0.4 the closed form sits far outside its validity domain: the
  // fitted rate saturates near the swap linewidth while the formula keeps
  // growing quadratically, so the honest relative error is large and stable.
  const DecayFit f040 = fit_decay_rate(0.4, 2);
  CHECK(f040.fitted_rate ==
        doctest::Approx(frozen::fitted_d040).epsilon(5e-4));
  CHECK(f040.relative_error >= 0.52);
  CHECK(f040.relative_error <= 0.56);
}

TEST_CASE("ascending convention matches its frozen reference") {
  const DecayFit fit =
      fit_decay_rate(0.02, 2, 1.0, CascadeLadder::ascending);
  CHECK(fit.fitted_rate ==
        doctest::Approx(frozen::fitted_d002_ascending).epsilon(5e-4));
  CHECK(fit.relative_error <= 0.02);
}

TEST_CASE("fitted rate approaches the quadratic small-coupling law") {
  const DecayFit fit = fit_decay_rate(0.02, 2);
  const double quadratic = 4.0 * 0.02 * 0.02 * 5.0;
  CHECK(fit.fitted_rate / quadratic == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("fitted rates rise monotonically with the coupling") {
  const std::vector<double> deltas = {0.02, 0.05, 0.1, 0.15,
                                      0.2, 0.3, 0.4, 0.5};
  const std::vector<DecayFit> fits = fit_decay_rates(deltas, 2);
  REQUIRE(fits.size() == deltas.size());
  for (std::size_t i = 0; i < fits.size(); ++i) {
    CHECK(fits[i].delta == doctest::Approx(deltas[i]));
    CHECK(fits[i].n_tilde == 2);
    CHECK(fits[i].fitted_rate ==
          doctest::Approx(frozen::fitted_grid[i]).epsilon(5e-4));
    if (i > 0) CHECK(fits[i].fitted_rate > fits[i - 1].fitted_rate);
  }
}

TEST_CASE("decay-rate fit is linear in the initial population") {
  const DecayFit full = fit_decay_rate(0.12, 2, 1.0);
  const DecayFit scaled = fit_decay_rate(0.12, 2, 0.3);
  CHECK(scaled.fitted_rate ==
        doctest::Approx(full.fitted_rate).epsilon(1e-6));
}

TEST_CASE("zero coupling yields a zero fitted rate") {
  const DecayFit fit = fit_decay_rate(0.0, 2);
  CHECK(abs(fit.fitted_rate) <= 1e-10);
  CHECK(fit.formula_rate == 0.0);
  CHECK(fit.relative_error <= 1e-10);
}

TEST_CASE("fit argument validation") {
  CHECK_THROWS_AS(fit_decay_rate(0.1, 2, 0.0), InvalidArgumentError);
  CHECK_THROWS_AS(fit_decay_rate(0.1, 2, -1.0), InvalidArgumentError);
  CHECK_THROWS_AS(fit_decay_rate(0.1, -1), InvalidArgumentError);
}

TEST_CASE("decay fits export as CSV") {
  std::vector<DecayFit> fits(2);
  fits[0] = DecayFit{0.12, 2, 0.2395, 0.2236, 0.0711};
  fits[1] = DecayFit{0.4, 2, 0.3495, 0.7619, 0.5413};
  std::ostringstream out;
  decay_fits_to_csv(fits, out);
  const std::string text = out.str();
  CHECK(text.rfind("delta,n_tilde,fitted_rate,formula_rate,relative_error\r\n",
                   0) == 0);
  CHECK(text.find("0.12,2,0.2395,0.2236,0.0711\r\n") != std::string::npos);
  CHECK(text.find("0.4,2,0.3495,0.7619,0.5413\r\n") != std::string::npos);
  // Exactly three CRLF line endings, no bare LF.
  std::size_t crlf = 0;
  for (std::size_t pos = text.find("\r\n"); pos != std::string::npos;
       pos = text.find("\r\n", pos + 2)) {
    ++crlf;
  }
  CHECK(crlf == 3);
}

TEST_CASE("model comparison with no couplings stays in vacuum") {
  WarningCapture capture;
  ThreeModeParams params;
  params.g_2ph = 0.0;
  params.g_ps = 0.0;
  params.eps_r1 = 0.0;
  params.chi_sr2 = 0.0;
  params.kappa_r1 = 1.0;
  params.kappa_r2 = 1.0;
  params.kappa_1ph = 1.0;
  params.n_tilde = 2;
  params.layout = ModeLayout{{6, 2, 2}};

  const std::vector<double> t_grid = {0.0, 0.1, 0.2};
  const ModelComparison result = compare_models(params, t_grid);
  REQUIRE(result.three_mode.times.size() == t_grid.size());
  REQUIRE(result.effective.times.size() == t_grid.size());
  for (double value : result.three_mode.column("fidelity")) {
    CHECK(value == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (double value : result.effective.column("fidelity")) {
    CHECK(value == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(result.max_abs_gap <= 1e-9);
}

TEST_CASE("model comparison rejects a drive without its coupling") {
  ThreeModeParams params;
  params.g_2ph = 0.0;
  params.eps_r1 = 5.0;
  params.kappa_r1 = 1.0;
  params.kappa_r2 = 1.0;
  params.layout = ModeLayout{{6, 2, 2}};
  CHECK_THROWS_AS(compare_models(params, {0.0, 0.1}), InvalidArgumentError);
}

TEST_CASE("model comparison tracks the reduced dynamics") {
  WarningCapture capture;
  ThreeModeParams params;
  params.g_2ph = 10.0;
  params.g_ps = 8.0;
  params.eps_r1 = 20.0;  // target amplitude alpha = sqrt(2)
  params.chi_sr2 = 400.0;
  params.kappa_r1 = 40.0;
  params.kappa_r2 = 40.0;
  params.kappa_1ph = 1.0;
  params.n_tilde = 2;
  params.layout = ModeLayout{{10, 3, 3}};

  const std::vector<double> t_grid = {0.0, 0.08, 0.2, 0.35, 0.5};
  PropagatorPlan plan;
  plan.method = PropagatorMethod::krylov_exponential;
  const ModelComparison result = compare_models(params, t_grid, plan);

  const std::vector<double>& full = result.three_mode.column("fidelity");
  const std::vector<double>& reduced = result.effective.column("fidelity");
  REQUIRE(full.size() == t_grid.size());
  REQUIRE(reduced.size() == t_grid.size());

  // Both models start from vacuum, so the initial fidelities agree exactly.
  CHECK(abs(full.front() - reduced.front()) <= 1e-9);
  for (std::size_t i = 0; i < full.size(); ++i) {
    CHECK(full[i] >= -1e-9);
    CHECK(full[i] <= 1.0 + 1e-9);
    CHECK(reduced[i] >= -1e-9);
    CHECK(reduced[i] <= 1.0 + 1e-9);
  }
  // The stabilization pulls both models well above the vacuum overlap.
  CHECK(reduced.back() > reduced.front() + 0.2);
  CHECK(full.back() > full.front() + 0.1);
  // The reduced model is a faithful but not exact stand-in at these ratios.
  CHECK(result.max_abs_gap > 1e-4);
  CHECK(result.max_abs_gap < 0.5);

  double recomputed = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    recomputed = std::max(recomputed, abs(full[i] - reduced[i]));
  }
  CHECK(result.max_abs_gap == doctest::Approx(recomputed));
}
