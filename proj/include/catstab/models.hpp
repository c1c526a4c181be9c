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
// The concrete cat-stabilization models and their engineered-rate formulas.
//
// Three levels of description of the same physical scheme, in decreasing
// order of realism:
//   three_mode_model      storage + two lossy buffer modes, microscopic
//                         couplings (g_2ph, g_ps, chi_sr2, ...)
//   two_mode_reduced_model  buffer r1 adiabatically eliminated; storage + r2
//                         with projector-conditioned photon transfer
//   effective_model       both buffers eliminated; single storage mode with
//                         engineered rates kappa_2ph and kappa_ps
// All rates are quoted in units of the single-photon loss rate kappa_1ph,
// times in units of 1/kappa_1ph.

#ifndef CATSTAB_MODELS_HPP
#define CATSTAB_MODELS_HPP

#include <string>
#include <vector>

#include "json.hpp"

#include "catstab/fock.hpp"
#include "catstab/lindblad.hpp"

namespace catstab {

// Single-mode engineered-dissipation model:
//   H = i(eps_2ph a^dag^2 - eps_2ph^* a^2)
//   collapse  kappa_2ph D(a^2), kappa_1ph D(a), kappa_ps D(J)
// where J = |2n~><2n~+1| transfers one photon out of the wrong-parity
// manifold (target_parity = odd uses J = |2n~-1><2n~| instead).
struct EffectiveParams {
  double kappa_1ph = 1.0;
  double kappa_2ph = 0.0;
  double kappa_ps = 0.0;
  Complex eps_2ph = 0.0;
  int n_tilde = 2;
  CatParity target_parity = CatParity::even;
};

// Microscopic storage + buffers model:
//   H = g_2ph(a_s^dag^2 a_r1 + h.c.) - eps_r1(a_r1 + a_r1^dag)
//       + g_ps(a_s a_r2^dag + h.c.)
//       + chi_sr2 (2n~ - a_s^dag a_s) a_r2^dag a_r2
//   collapse  kappa_r1 D(a_r1), kappa_r2 D(a_r2), kappa_1ph D(a_s)
// Self-Kerr terms -(chi/2) a^dag^2 a^2 per mode are dropped by default (the
// simulated rotating-frame equations contain none); include_self_kerr adds
// them back for sensitivity studies.
struct ThreeModeParams {
  double g_2ph = 0.0;
  double g_ps = 0.0;
  double eps_r1 = 0.0;
  double chi_sr2 = 0.0;
  double kappa_r1 = 0.0;
  double kappa_r2 = 0.0;
  double kappa_1ph = 1.0;
  int n_tilde = 2;
  ModeLayout layout{{20, 3, 3}};  // (storage, r1, r2); reduced model wants 2
  bool include_self_kerr = false;
  double chi_ss = 0.0;
  double chi_r1r1 = 0.0;
  double chi_r2r2 = 0.0;
};

// Pump calibration inputs for deriving g_2ph and g_ps from circuit data.
struct PumpParams {
  double eps_p = 0.0;
  double eps_p_prime = 0.0;
  double omega_s = 0.0;
  double omega_r1 = 0.0;
  double omega_r2 = 0.0;
  double omega_p = 0.0;
  double omega_p_prime = 0.0;
  double chi_sr1 = 0.0;
  double chi_r2r2 = 0.0;
  double chi_sr2 = 0.0;
  double chi_ss = 0.0;
  double chi_r1r1 = 0.0;
};

// dim = 0 picks the storage truncation from the drive strength (the cat
// amplitude alpha = sqrt(2|eps_2ph|/kappa_2ph)) with room for the
// photon-selective jump levels.  Zero-rate collapse terms are omitted.
LindbladModel effective_model(const EffectiveParams& p, int dim = 0);

// Requires a three-mode layout (storage, r1, r2).
LindbladModel three_mode_model(const ThreeModeParams& p);

// Requires a two-mode layout (storage, r2).  kappa_2ph and eps_2ph are
// derived internally from (g_2ph, eps_r1, kappa_r1).
LindbladModel two_mode_reduced_model(const ThreeModeParams& p);

// kappa_2ph = 4 g_2ph^2 / kappa_r1.
double rate_kappa_2ph(double g_2ph, double kappa_r1);

// kappa_ps = [4 d^2 (2n~+1) / (1 + 4 d^2 (2n~+1))] kappa_r2, d = g_ps/kappa_r2.
// Monotone in g_ps and strictly below kappa_r2.
double rate_kappa_ps(double g_ps, double kappa_r2, int n_tilde);

// g_2ph = [eps_p / (omega_p - omega_r1)] chi_sr1 / 2.
double pump_g_2ph(const PumpParams& pp);

// g_ps = sqrt(chi_r2r2 chi_sr2) |eps_p' / (omega_p' - omega_r2)|^2.
double pump_g_ps(const PumpParams& pp);

struct DriveCalibration {
  Complex alpha;    // stabilized cat amplitude sqrt(eps_r1 / g_2ph)
  Complex eps_2ph;  // equivalent two-photon drive 2 g_2ph eps_r1 / kappa_r1
};

DriveCalibration alpha_from_drive(double eps_r1, double g_2ph,
                                  double kappa_r1);

// Audits the time-scale separations the eliminations rest on:
//   kappa_1ph << kappa_r1, kappa_1ph << kappa_r2,
//   kappa_r2 << chi_sr2, g_ps << chi_sr2  ("<<" means ratio <= 1/5)
// and g_2ph <= kappa_r1.  Each violation is returned and also warned.
std::vector<std::string> check_rate_hierarchy(const ThreeModeParams& p);

// Half the target even photon number: 2 n~ is the even integer nearest to
// |alpha|^2, ties broken downward.
int default_n_tilde(Complex alpha);

// Strict loaders: unknown keys raise ConfigError; absent keys keep the
// defaults above.  eps_2ph accepts a number or an [re, im] pair;
// target_parity accepts "+"/"-" (or "even"/"odd"); layout is an int array.
EffectiveParams effective_params_from_json(const nlohmann::json& j);
ThreeModeParams three_mode_params_from_json(const nlohmann::json& j);
PumpParams pump_params_from_json(const nlohmann::json& j);

}  // namespace catstab

#endif  // CATSTAB_MODELS_HPP
