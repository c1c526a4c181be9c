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

#include "catstab/models.hpp"

#include <cmath>
#include <sstream>

#include "catstab/errors.hpp"
#include "catstab/warnings.hpp"

namespace catstab {

namespace {

constexpr Complex kI{0.0, 1.0};

void push_term(std::vector<CollapseTerm>& terms, double rate,
               const Operator& op) {
  if (rate < 0) throw InvalidArgumentError("collapse rate must be >= 0");
  if (rate > 0) terms.push_back({rate, op});
}

Operator self_kerr(int mode, double chi, const ModeLayout& layout) {
  int d = static_cast<int>(layout.dim(mode));
  Operator a = destroy(d);
  Operator quartic = a.adjoint() * a.adjoint() * a * a;
  return (-chi / 2.0) * embed(quartic, mode, layout);
}

}  // namespace

LindbladModel effective_model(const EffectiveParams& p, int dim) {
  if (p.kappa_1ph < 0 || p.kappa_2ph < 0 || p.kappa_ps < 0)
    throw InvalidArgumentError("effective_model: rates must be >= 0");
  if (p.n_tilde < 0)
    throw InvalidArgumentError("effective_model: n_tilde must be >= 0");
  if (p.target_parity == CatParity::odd && p.n_tilde == 0)
    throw InvalidArgumentError(
        "effective_model: odd-parity target needs n_tilde >= 1 (the jump "
        "|2n~-1><2n~| has no levels below 0)");

  // The jump operator needs the levels 2n~ and 2n~+1 to exist.
  int min_dim = 2 * p.n_tilde + 2;
  int d = dim;
  if (d == 0) {
    double alpha = p.kappa_2ph > 0
                       ? std::sqrt(2.0 * std::abs(p.eps_2ph) / p.kappa_2ph)
                       : std::sqrt(2.0 * p.n_tilde);
    d = std::max(default_storage_dim(alpha), min_dim);
  } else if (d < min_dim) {
    std::ostringstream msg;
    msg << "effective_model: dim " << d << " cannot hold the jump levels; "
        << "need at least " << min_dim;
    throw InvalidArgumentError(msg.str());
  }

  Operator a = destroy(d);
  Operator a2 = a * a;
  LindbladModel model;
  model.hamiltonian = (kI * p.eps_2ph) * a2.adjoint() +
                      (-kI * std::conj(p.eps_2ph)) * a2;

  push_term(model.collapse_terms, p.kappa_2ph, a2);
  push_term(model.collapse_terms, p.kappa_1ph, a);
  int upper = p.target_parity == CatParity::even ? 2 * p.n_tilde + 1
                                                 : 2 * p.n_tilde;
  push_term(model.collapse_terms, p.kappa_ps, jump(upper - 1, upper, d));

  model.validate();
  return model;
}

LindbladModel three_mode_model(const ThreeModeParams& p) {
  if (p.layout.num_modes() != 3)
    throw LayoutError("three_mode_model: layout " + p.layout.to_string() +
                      " must have exactly 3 modes (storage, r1, r2)");
  if (p.n_tilde < 0)
    throw InvalidArgumentError("three_mode_model: n_tilde must be >= 0");

  const ModeLayout& l = p.layout;
  Operator a_s = embed(destroy(static_cast<int>(l.dim(0))), 0, l);
  Operator a_r1 = embed(destroy(static_cast<int>(l.dim(1))), 1, l);
  Operator a_r2 = embed(destroy(static_cast<int>(l.dim(2))), 2, l);
  Operator n_s = a_s.adjoint() * a_s;
  Operator n_r2 = a_r2.adjoint() * a_r2;
  Operator id = Operator::identity(l);

  Operator h = p.g_2ph * (a_s.adjoint() * a_s.adjoint() * a_r1 +
                          a_s * a_s * a_r1.adjoint()) +
               (-p.eps_r1) * (a_r1 + a_r1.adjoint()) +
               p.g_ps * (a_s * a_r2.adjoint() + a_s.adjoint() * a_r2) +
               p.chi_sr2 * ((2.0 * p.n_tilde) * id - n_s) * n_r2;
  if (p.include_self_kerr)
    h = h + self_kerr(0, p.chi_ss, l) + self_kerr(1, p.chi_r1r1, l) +
        self_kerr(2, p.chi_r2r2, l);

  LindbladModel model;
  model.hamiltonian = h;
  push_term(model.collapse_terms, p.kappa_r1, a_r1);
  push_term(model.collapse_terms, p.kappa_r2, a_r2);
  push_term(model.collapse_terms, p.kappa_1ph, a_s);
  model.validate();
  return model;
}

LindbladModel two_mode_reduced_model(const ThreeModeParams& p) {
  if (p.layout.num_modes() != 2)
    throw LayoutError("two_mode_reduced_model: layout " +
                      p.layout.to_string() +
                      " must have exactly 2 modes (storage, r2)");
  if (p.n_tilde < 0)
    throw InvalidArgumentError("two_mode_reduced_model: n_tilde must be >= 0");
  const int ds = static_cast<int>(p.layout.dim(0));
  const int d2 = static_cast<int>(p.layout.dim(1));
  if (ds < 2 * p.n_tilde + 2) {
    std::ostringstream msg;
    msg << "two_mode_reduced_model: storage dim " << ds
        << " cannot hold the transfer manifold; need at least "
        << 2 * p.n_tilde + 2;
    throw InvalidArgumentError(msg.str());
  }

  double kappa_2ph =
      p.g_2ph > 0 ? rate_kappa_2ph(p.g_2ph, p.kappa_r1) : 0.0;
  Complex eps_2ph = 0.0;
  if (p.g_2ph > 0) eps_2ph = alpha_from_drive(p.eps_r1, p.g_2ph, p.kappa_r1)
                                 .eps_2ph;

  const ModeLayout& l = p.layout;
  Operator a_s = embed(destroy(ds), 0, l);
  Operator a_r2 = embed(destroy(d2), 1, l);
  Operator p0_r2 = embed(fock_projector(0, d2), 1, l);
  Operator a_s2 = a_s * a_s;

  // Two-photon drive and dissipation act only while r2 is empty.
  Operator h = ((kI * eps_2ph) * a_s2.adjoint() +
                (-kI * std::conj(eps_2ph)) * a_s2) *
               p0_r2;

  // Projector-conditioned photon transfer: |2n~+1-j, j> <2n~-j, j+1| legs.
  for (int j = 0; j <= std::min(2 * p.n_tilde + 1, d2 - 1); ++j) {
    Operator pi_joint = embed(fock_projector(2 * p.n_tilde + 1 - j, ds), 0, l) *
                        embed(fock_projector(j, d2), 1, l);
    Operator leg = pi_joint * a_s.adjoint() * a_r2;
    h = h + p.g_ps * (leg + leg.adjoint());
  }

  LindbladModel model;
  model.hamiltonian = h;
  push_term(model.collapse_terms, kappa_2ph, a_s2 * p0_r2);
  for (int j = 0; j < ds; ++j)
    push_term(model.collapse_terms, p.kappa_r2,
              a_r2 * embed(fock_projector(j, ds), 0, l));
  for (int j = 0; j < d2; ++j)
    push_term(model.collapse_terms, p.kappa_1ph,
              a_s * embed(fock_projector(j, d2), 1, l));
  model.validate();
  return model;
}

double rate_kappa_2ph(double g_2ph, double kappa_r1) {
  if (kappa_r1 <= 0)
    throw InvalidArgumentError("rate_kappa_2ph: kappa_r1 must be > 0");
  return 4.0 * g_2ph * g_2ph / kappa_r1;
}

double rate_kappa_ps(double g_ps, double kappa_r2, int n_tilde) {
  if (kappa_r2 <= 0)
    throw InvalidArgumentError("rate_kappa_ps: kappa_r2 must be > 0");
  double delta = g_ps / kappa_r2;
  double x = 4.0 * delta * delta * (2.0 * n_tilde + 1.0);
  return x / (1.0 + x) * kappa_r2;
}

double pump_g_2ph(const PumpParams& pp) {
  if (pp.omega_p == pp.omega_r1)
    throw InvalidArgumentError("pump_g_2ph: pump resonant with r1 "
                               "(omega_p == omega_r1)");
  return pp.eps_p / (pp.omega_p - pp.omega_r1) * pp.chi_sr1 / 2.0;
}

double pump_g_ps(const PumpParams& pp) {
  if (pp.omega_p_prime == pp.omega_r2)
    throw InvalidArgumentError("pump_g_ps: pump resonant with r2 "
                               "(omega_p' == omega_r2)");
  double ratio = pp.eps_p_prime / (pp.omega_p_prime - pp.omega_r2);
  return std::sqrt(pp.chi_r2r2 * pp.chi_sr2) * ratio * ratio;
}

DriveCalibration alpha_from_drive(double eps_r1, double g_2ph,
                                  double kappa_r1) {
  if (g_2ph <= 0)
    throw InvalidArgumentError("alpha_from_drive: g_2ph must be > 0");
  if (kappa_r1 <= 0)
    throw InvalidArgumentError("alpha_from_drive: kappa_r1 must be > 0");
  DriveCalibration cal;
  cal.alpha = std::sqrt(Complex(eps_r1 / g_2ph));
  cal.eps_2ph = 2.0 * g_2ph * eps_r1 / kappa_r1;
  return cal;
}

std::vector<std::string> check_rate_hierarchy(const ThreeModeParams& p) {
  std::vector<std::string> violations;
  auto flag = [&](bool violated, const std::string& text) {
    if (!violated) return;
    violations.push_back(text);
    warn("rate hierarchy: " + text);
  };
  auto ratio_text = [](const char* slow, double a, const char* fast,
                       double b) {
    std::ostringstream msg;
    msg << slow << " = " << a << " is not well below " << fast << " = " << b
        << " (need ratio <= 1/5)";
    return msg.str();
  };
  flag(5.0 * p.kappa_1ph > p.kappa_r1,
       ratio_text("kappa_1ph", p.kappa_1ph, "kappa_r1", p.kappa_r1) +
           "; r1 elimination unreliable");
  flag(5.0 * p.kappa_1ph > p.kappa_r2,
       ratio_text("kappa_1ph", p.kappa_1ph, "kappa_r2", p.kappa_r2) +
           "; r2 elimination unreliable");
  flag(5.0 * p.kappa_r2 > p.chi_sr2,
       ratio_text("kappa_r2", p.kappa_r2, "chi_sr2", p.chi_sr2) +
           "; dissipative broadening washes out number selectivity");
  flag(5.0 * p.g_ps > p.chi_sr2,
       ratio_text("g_ps", p.g_ps, "chi_sr2", p.chi_sr2) +
           "; transfer drive breaks number selectivity");
  if (p.g_2ph > p.kappa_r1) {
    std::ostringstream msg;
    msg << "g_2ph = " << p.g_2ph << " exceeds kappa_r1 = " << p.kappa_r1
        << "; two-photon coupling beyond adiabatic-elimination validity";
    flag(true, msg.str());
  }
  return violations;
}

int default_n_tilde(Complex alpha) {
  // Even integer nearest to |alpha|^2; exact ties round down.  Snap to a
  // 1e-9 lattice first so that ties survive rounding noise in |alpha|^2
  // (e.g. sqrt(5) squared lands a few ulp above 5).
  double n_mean = std::round(std::norm(alpha) * 1e9) / 1e9;
  long half = static_cast<long>(std::ceil(n_mean / 2.0 - 0.5));
  return static_cast<int>(std::max(half, 0L));
}

// --- JSON loaders -----------------------------------------------------------

namespace {

using nlohmann::json;

void require_known_keys(const json& j, const std::vector<std::string>& known,
                        const char* what) {
  if (!j.is_object())
    throw ConfigError(std::string(what) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const auto& k : known)
      if (item.key() == k) ok = true;
    if (!ok)
      throw ConfigError(std::string(what) + ": unknown key \"" + item.key() +
                        "\"");
  }
}

double load_real(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number())
    throw ConfigError(std::string("key \"") + key + "\" must be a number");
  return v.get<double>();
}

int load_count(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long>() < 0)
    throw ConfigError(std::string("key \"") + key +
                      "\" must be a nonnegative integer");
  return v.get<int>();
}

Complex load_complex(const json& j, const char* key, Complex fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number()) return Complex(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return Complex(v[0].get<double>(), v[1].get<double>());
  throw ConfigError(std::string("key \"") + key +
                    "\" must be a number or an [re, im] pair");
}

}  // namespace

EffectiveParams effective_params_from_json(const nlohmann::json& j) {
  require_known_keys(j,
                     {"kappa_1ph", "kappa_2ph", "kappa_ps", "eps_2ph",
                      "n_tilde", "target_parity"},
                     "effective params");
  EffectiveParams p;
  p.kappa_1ph = load_real(j, "kappa_1ph", p.kappa_1ph);
  p.kappa_2ph = load_real(j, "kappa_2ph", p.kappa_2ph);
  p.kappa_ps = load_real(j, "kappa_ps", p.kappa_ps);
  p.eps_2ph = load_complex(j, "eps_2ph", p.eps_2ph);
  p.n_tilde = load_count(j, "n_tilde", p.n_tilde);
  if (j.contains("target_parity")) {
    std::string s = j.at("target_parity").is_string()
                        ? j.at("target_parity").get<std::string>()
                        : std::string();
    if (s == "+" || s == "even")
      p.target_parity = CatParity::even;
    else if (s == "-" || s == "odd")
      p.target_parity = CatParity::odd;
    else
      throw ConfigError("key \"target_parity\" must be \"+\" or \"-\"");
  }
  return p;
}

ThreeModeParams three_mode_params_from_json(const nlohmann::json& j) {
  require_known_keys(j,
                     {"g_2ph", "g_ps", "eps_r1", "chi_sr2", "kappa_r1",
                      "kappa_r2", "kappa_1ph", "n_tilde", "layout",
                      "include_self_kerr", "chi_ss", "chi_r1r1", "chi_r2r2"},
                     "three-mode params");
  ThreeModeParams p;
  p.g_2ph = load_real(j, "g_2ph", p.g_2ph);
  p.g_ps = load_real(j, "g_ps", p.g_ps);
  p.eps_r1 = load_real(j, "eps_r1", p.eps_r1);
  p.chi_sr2 = load_real(j, "chi_sr2", p.chi_sr2);
  p.kappa_r1 = load_real(j, "kappa_r1", p.kappa_r1);
  p.kappa_r2 = load_real(j, "kappa_r2", p.kappa_r2);
  p.kappa_1ph = load_real(j, "kappa_1ph", p.kappa_1ph);
  p.n_tilde = load_count(j, "n_tilde", p.n_tilde);
  p.chi_ss = load_real(j, "chi_ss", p.chi_ss);
  p.chi_r1r1 = load_real(j, "chi_r1r1", p.chi_r1r1);
  p.chi_r2r2 = load_real(j, "chi_r2r2", p.chi_r2r2);
  if (j.contains("include_self_kerr")) {
    if (!j.at("include_self_kerr").is_boolean())
      throw ConfigError("key \"include_self_kerr\" must be a boolean");
    p.include_self_kerr = j.at("include_self_kerr").get<bool>();
  }
  if (j.contains("layout")) {
    const json& v = j.at("layout");
    if (!v.is_array() || v.empty())
      throw ConfigError("key \"layout\" must be a nonempty int array");
    std::vector<int> dims;
    for (const auto& e : v) {
      if (!e.is_number_integer())
        throw ConfigError("key \"layout\" must hold integers");
      dims.push_back(e.get<int>());
    }
    p.layout = ModeLayout(dims);
  }
  return p;
}

PumpParams pump_params_from_json(const nlohmann::json& j) {
  require_known_keys(j,
                     {"eps_p", "eps_p_prime", "omega_s", "omega_r1",
                      "omega_r2", "omega_p", "omega_p_prime", "chi_sr1",
                      "chi_r2r2", "chi_sr2", "chi_ss", "chi_r1r1"},
                     "pump params");
  PumpParams p;
  p.eps_p = load_real(j, "eps_p", p.eps_p);
  p.eps_p_prime = load_real(j, "eps_p_prime", p.eps_p_prime);
  p.omega_s = load_real(j, "omega_s", p.omega_s);
  p.omega_r1 = load_real(j, "omega_r1", p.omega_r1);
  p.omega_r2 = load_real(j, "omega_r2", p.omega_r2);
  p.omega_p = load_real(j, "omega_p", p.omega_p);
  p.omega_p_prime = load_real(j, "omega_p_prime", p.omega_p_prime);
  p.chi_sr1 = load_real(j, "chi_sr1", p.chi_sr1);
  p.chi_r2r2 = load_real(j, "chi_r2r2", p.chi_r2r2);
  p.chi_sr2 = load_real(j, "chi_sr2", p.chi_sr2);
  p.chi_ss = load_real(j, "chi_ss", p.chi_ss);
  p.chi_r1r1 = load_real(j, "chi_r1r1", p.chi_r1r1);
  for (const char* key : {"omega_s", "omega_r1", "omega_r2", "omega_p",
                          "omega_p_prime"})
    if (j.contains(key) && j.at(key).get<double>() <= 0)
      throw ConfigError(std::string("pump params: \"") + key +
                        "\" must be > 0");
  return p;
}

}  // namespace catstab
