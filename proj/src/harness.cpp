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

#include "catstab/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "catstab/errors.hpp"
#include "catstab/fock.hpp"
#include "catstab/models.hpp"
#include "catstab/parallel.hpp"
#include "catstab/svg.hpp"
#include "catstab/warnings.hpp"

namespace catstab {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

std::string format_short(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", value);
  return buf;
}

// ---------------------------------------------------------------------------
// Config parsing.

void require_object(const json& j, const char* what) {
  if (!j.is_object()) {
    throw ConfigError(std::string(what) + " must be a JSON object");
  }
}

void require_known_keys(const json& j,
                        const std::vector<std::string>& known,
                        const char* what) {
  for (const auto& item : j.items()) {
    bool found = false;
    for (const std::string& k : known) {
      if (item.key() == k) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw ConfigError(std::string(what) + ": unknown key \"" + item.key() +
                        "\"");
    }
  }
}

double grid_real(const json& grid, const char* key, double fallback) {
  if (!grid.contains(key)) return fallback;
  const json& v = grid.at(key);
  if (!v.is_number()) {
    throw ConfigError(std::string("grid key \"") + key +
                      "\" must be a number");
  }
  const double value = v.get<double>();
  if (!std::isfinite(value)) {
    throw ConfigError(std::string("grid key \"") + key + "\" must be finite");
  }
  return value;
}

int grid_int(const json& grid, const char* key, int fallback) {
  if (!grid.contains(key)) return fallback;
  const json& v = grid.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(std::string("grid key \"") + key +
                      "\" must be an integer");
  }
  return v.get<int>();
}

AxisSpec grid_axis(const json& grid, const char* key) {
  if (!grid.contains(key)) {
    throw ConfigError(std::string("sweep grid requires key \"") + key +
                      "\" as [min, max, step]");
  }
  const json& v = grid.at(key);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() ||
      !v[1].is_number() || !v[2].is_number()) {
    throw ConfigError(std::string("grid key \"") + key +
                      "\" must be [min, max, step] with numeric entries");
  }
  AxisSpec axis{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  if (!(axis.step > 0.0)) {
    throw ConfigError(std::string("grid key \"") + key +
                      "\": step must be positive");
  }
  if (axis.max < axis.min) {
    throw ConfigError(std::string("grid key \"") + key +
                      "\": max must not be below min");
  }
  return axis;
}

void parse_time_grid(const json& grid, TimeGridSpec* spec) {
  spec->t_end = grid_real(grid, "t_end", spec->t_end);
  spec->samples = grid_int(grid, "samples", spec->samples);
  if (!(spec->t_end > 0.0)) {
    throw ConfigError("grid key \"t_end\" must be positive");
  }
  if (spec->samples < 2) {
    throw ConfigError("grid key \"samples\" must be at least 2");
  }
}

void parse_reduce_params(const json& params, ExperimentConfig* config) {
  require_known_keys(params, {"n_tilde", "ladder"}, "reduce params");
  if (params.contains("n_tilde")) {
    const json& v = params.at("n_tilde");
    if (!v.is_number_integer() || v.get<int>() < 0) {
      throw ConfigError("key \"n_tilde\" must be a nonnegative integer");
    }
    config->n_tilde = v.get<int>();
  }
  if (params.contains("ladder")) {
    const std::string s = params.at("ladder").is_string()
                              ? params.at("ladder").get<std::string>()
                              : std::string();
    if (s == "descending") {
      config->ladder = CascadeLadder::descending;
    } else if (s == "ascending") {
      config->ladder = CascadeLadder::ascending;
    } else {
      throw ConfigError(
          "key \"ladder\" must be \"descending\" or \"ascending\"");
    }
  }
}

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

// Best-effort anchor for semantic errors: locate the first key quoted in the
// message within the original text.
int line_of_quoted_token(const std::string& text, const std::string& message) {
  const std::size_t q1 = message.find('"');
  if (q1 == std::string::npos) return 1;
  const std::size_t q2 = message.find('"', q1 + 1);
  if (q2 == std::string::npos) return 1;
  const std::string token =
      "\"" + message.substr(q1 + 1, q2 - q1 - 1) + "\"";
  const std::size_t pos = text.find(token);
  if (pos == std::string::npos) return 1;
  return line_of_byte(text, pos);
}

// ---------------------------------------------------------------------------
// Model assembly shared by evolve / steady / wigner.

struct ModelBundle {
  LindbladModel model;
  DensityMatrix initial;
  StateVector target;  // storage-mode target
  bool multimode = false;
};

Complex effective_target_amplitude(const EffectiveParams& p) {
  if (p.kappa_2ph > 0.0) return std::sqrt(2.0 * p.eps_2ph / p.kappa_2ph);
  if (std::abs(p.eps_2ph) == 0.0) return 0.0;
  throw ConfigError(
      "effective model: eps_2ph is nonzero but kappa_2ph is zero, so no "
      "target amplitude is defined");
}

Complex drive_target_amplitude(const ThreeModeParams& p) {
  if (p.g_2ph > 0.0) return alpha_from_drive(p.eps_r1, p.g_2ph, p.kappa_r1).alpha;
  if (p.eps_r1 == 0.0) return 0.0;
  throw ConfigError(
      "key \"eps_r1\" is nonzero but \"g_2ph\" is zero, so no target "
      "amplitude is defined");
}

DensityMatrix vacuum_density(const ModeLayout& layout) {
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(layout.total());
  amps(0) = 1.0;
  return DensityMatrix::from_pure(StateVector{layout, amps});
}

ModelBundle build_bundle(const ExperimentConfig& config) {
  switch (config.model) {
    case ModelKind::effective: {
      const EffectiveParams p = effective_params_from_json(config.params);
      LindbladModel model = effective_model(p);
      const int dim = static_cast<int>(model.layout().total());
      const Complex alpha = effective_target_amplitude(p);
      StateVector target = cat_state(alpha, p.target_parity, dim);
      DensityMatrix initial = DensityMatrix::from_pure(fock_state(0, dim));
      return ModelBundle{std::move(model), std::move(initial),
                         std::move(target), false};
    }
    case ModelKind::two_mode: {
      const ThreeModeParams p = three_mode_params_from_json(config.params);
      if (p.layout.num_modes() != 2) {
        throw ConfigError("model \"two_mode\" needs key \"layout\" with "
                          "exactly 2 mode dimensions (storage, readout)");
      }
      LindbladModel model = two_mode_reduced_model(p);
      const Complex alpha = drive_target_amplitude(p);
      StateVector target =
          cat_state(alpha, CatParity::even, static_cast<int>(p.layout.dim(0)));
      return ModelBundle{std::move(model), vacuum_density(p.layout),
                         std::move(target), true};
    }
    case ModelKind::three_mode: {
      const ThreeModeParams p = three_mode_params_from_json(config.params);
      if (p.layout.num_modes() != 3) {
        throw ConfigError("model \"three_mode\" needs key \"layout\" with "
                          "exactly 3 mode dimensions (storage, two readouts)");
      }
      LindbladModel model = three_mode_model(p);
      const Complex alpha = drive_target_amplitude(p);
      StateVector target =
          cat_state(alpha, CatParity::even, static_cast<int>(p.layout.dim(0)));
      return ModelBundle{std::move(model), vacuum_density(p.layout),
                         std::move(target), true};
    }
  }
  throw ConfigError("unrecognized model kind");
}

std::vector<Observer> storage_observers(const ModelBundle& bundle) {
  const StateVector target = bundle.target;
  const bool multimode = bundle.multimode;
  const auto storage_part = [multimode](const DensityMatrix& rho) {
    return multimode ? partial_trace(rho, {0}) : rho;
  };
  return {
      Observer{"fidelity",
               [storage_part, target](const DensityMatrix& rho) {
                 return fidelity(storage_part(rho), target);
               }},
      Observer{"mean_parity",
               [storage_part](const DensityMatrix& rho) {
                 return mean_parity(storage_part(rho));
               }},
      Observer{"mean_photon",
               [storage_part](const DensityMatrix& rho) {
                 return mean_photon(storage_part(rho));
               }},
  };
}

// ---------------------------------------------------------------------------
// Artifact persistence.

void write_text(const std::string& dir, const std::string& name,
                const std::string& content,
                std::vector<std::string>* artifacts) {
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write artifact file " + path.string());
  }
  out << content;
  out.close();
  if (!out) {
    throw ConfigError("failed writing artifact file " + path.string());
  }
  artifacts->push_back(name);
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

json steady_report(const DensityMatrix& storage, const StateVector& target) {
  const DensityMatrix::Validity validity = storage.validate();
  json report;
  report["fidelity"] = fidelity(storage, target);
  report["mean_parity"] = mean_parity(storage);
  report["mean_photon"] = mean_photon(storage);
  report["hermiticity_defect"] = validity.herm_err;
  report["trace_defect"] = validity.trace_err;
  report["min_eigenvalue"] = validity.min_eig;
  return report;
}

std::string populations_csv(const DensityMatrix& storage) {
  const Eigen::VectorXd pmf = photon_pmf(storage);
  std::ostringstream out;
  out << "n,population\r\n";
  for (Eigen::Index n = 0; n < pmf.size(); ++n) {
    out << n << ',' << format_double(pmf(n)) << "\r\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Experiment payloads.

void run_evolve_experiment(const ExperimentConfig& config,
                           const std::string& dir, RunOutcome* outcome,
                           json* summary) {
  const ModelBundle bundle = build_bundle(config);
  const TimeSeries series =
      evolve(bundle.model, bundle.initial, config.time_grid.points(),
             PropagatorPlan{}, storage_observers(bundle));
  {
    std::ostringstream csv;
    series.to_csv(csv);
    write_text(dir, "timeseries.csv", csv.str(), &outcome->artifacts);
  }
  write_text(dir, "timeseries.json", series.to_json() + "\n",
             &outcome->artifacts);

  const std::vector<double>& fidelity_curve = series.column("fidelity");
  LineChartSpec chart;
  chart.title = "stabilization fidelity";
  chart.x_label = "t * kappa_1ph";
  chart.y_label = "fidelity";
  chart.series = {{"fidelity", series.times, fidelity_curve}};
  write_text(dir, "fidelity.svg", svg_line_chart(chart), &outcome->artifacts);

  const PlateauStats plateau = plateau_stats(fidelity_curve);
  (*summary)["plateau_fidelity"] = plateau.value;
  (*summary)["plateau_spread"] = plateau.spread;
  (*summary)["plateau_converged"] = plateau.converged;
  (*summary)["final_fidelity"] = fidelity_curve.back();
  outcome->summary =
      "plateau fidelity " + format_short(plateau.value) +
      (plateau.converged ? " (converged)" : " (still drifting)");
}

void run_steady_experiment(const ExperimentConfig& config,
                           const std::string& dir, RunOutcome* outcome,
                           json* summary) {
  const ModelBundle bundle = build_bundle(config);
  const DensityMatrix rho = steady_state(bundle.model);
  const DensityMatrix storage =
      bundle.multimode ? partial_trace(rho, {0}) : rho;
  const json report = steady_report(storage, bundle.target);
  write_text(dir, "steady.json", json_text(report), &outcome->artifacts);
  write_text(dir, "populations.csv", populations_csv(storage),
             &outcome->artifacts);
  *summary = report;
  outcome->summary =
      "steady fidelity " + format_short(report.at("fidelity").get<double>()) +
      ", parity " + format_short(report.at("mean_parity").get<double>());
}

void run_wigner_experiment(const ExperimentConfig& config,
                           const std::string& dir, RunOutcome* outcome,
                           json* summary) {
  const ModelBundle bundle = build_bundle(config);
  const DensityMatrix rho = steady_state(bundle.model);
  const DensityMatrix storage =
      bundle.multimode ? partial_trace(rho, {0}) : rho;
  write_text(dir, "steady.json",
             json_text(steady_report(storage, bundle.target)),
             &outcome->artifacts);

  const WignerGrid grid = wigner(storage, config.wigner_grid);
  {
    std::ostringstream csv;
    grid.to_csv(csv);
    write_text(dir, "wigner.csv", csv.str(), &outcome->artifacts);
  }

  HeatmapSpec heatmap;
  heatmap.title = "steady-state Wigner function";
  heatmap.x_label = "x";
  heatmap.y_label = "p";
  heatmap.x_values.assign(grid.x_axis.data(),
                          grid.x_axis.data() + grid.x_axis.size());
  heatmap.y_values.assign(grid.p_axis.data(),
                          grid.p_axis.data() + grid.p_axis.size());
  heatmap.values = grid.values;
  heatmap.diverging = true;
  write_text(dir, "wigner.svg", svg_heatmap(heatmap), &outcome->artifacts);

  json report;
  report["min_w"] = grid.min_value();
  report["w_origin"] = grid.at_origin();
  report["two_over_pi_mean_parity"] = 2.0 / M_PI * mean_parity(storage);
  report["grid_integral"] = grid.integral();
  write_text(dir, "wigner.json", json_text(report), &outcome->artifacts);
  *summary = report;
  outcome->summary = "min W " + format_short(grid.min_value()) +
                     ", W(0,0) " + format_short(grid.at_origin());
}

void run_compare_experiment(const ExperimentConfig& config,
                            const std::string& dir, RunOutcome* outcome,
                            json* summary) {
  const ThreeModeParams params = three_mode_params_from_json(config.params);
  const ModelComparison comparison =
      compare_models(params, config.time_grid.points(), PropagatorPlan{});

  TimeSeries merged;
  merged.times = comparison.three_mode.times;
  merged.names = {"three_mode", "effective"};
  merged.columns = {comparison.three_mode.column("fidelity"),
                    comparison.effective.column("fidelity")};
  {
    std::ostringstream csv;
    merged.to_csv(csv);
    write_text(dir, "compare.csv", csv.str(), &outcome->artifacts);
  }

  LineChartSpec chart;
  chart.title = "three-mode model vs reduced model";
  chart.x_label = "t * kappa_1ph";
  chart.y_label = "fidelity";
  chart.series = {{"three_mode", merged.times, merged.columns[0]},
                  {"effective", merged.times, merged.columns[1]}};
  write_text(dir, "compare.svg", svg_line_chart(chart), &outcome->artifacts);

  json report;
  report["max_abs_gap"] = comparison.max_abs_gap;
  report["final_three_mode"] = merged.columns[0].back();
  report["final_effective"] = merged.columns[1].back();
  write_text(dir, "compare.json", json_text(report), &outcome->artifacts);
  *summary = report;
  outcome->summary =
      "max fidelity gap " + format_short(comparison.max_abs_gap);
}

void run_reduce_experiment(const ExperimentConfig& config,
                           const std::string& dir, RunOutcome* outcome,
                           json* summary) {
  const std::size_t n = config.deltas.size();
  std::vector<DecayFit> fits(n);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
    fits[static_cast<std::size_t>(i)] =
        fit_decay_rate(config.deltas[static_cast<std::size_t>(i)],
                       config.n_tilde, 1.0, config.ladder);
  });

  {
    std::ostringstream csv;
    decay_fits_to_csv(fits, csv);
    write_text(dir, "decay_fits.csv", csv.str(), &outcome->artifacts);
  }

  std::vector<double> deltas, fitted, formula;
  double max_error = 0.0;
  json fit_list = json::array();
  for (const DecayFit& fit : fits) {
    deltas.push_back(fit.delta);
    fitted.push_back(fit.fitted_rate);
    formula.push_back(fit.formula_rate);
    max_error = std::max(max_error, fit.relative_error);
    fit_list.push_back(json{{"delta", fit.delta},
                            {"fitted_rate", fit.fitted_rate},
                            {"formula_rate", fit.formula_rate},
                            {"relative_error", fit.relative_error}});
  }

  LineChartSpec chart;
  chart.title = "engineered pumping rate: fit vs formula";
  chart.x_label = "g_ps / kappa_r2";
  chart.y_label = "rate / kappa_r2";
  chart.series = {{"fitted", deltas, fitted}, {"formula", deltas, formula}};
  write_text(dir, "reduce.svg", svg_line_chart(chart), &outcome->artifacts);

  json report;
  report["n_tilde"] = config.n_tilde;
  report["ladder"] = config.ladder == CascadeLadder::descending
                         ? "descending"
                         : "ascending";
  report["max_relative_error"] = max_error;
  report["fits"] = fit_list;
  write_text(dir, "reduce.json", json_text(report), &outcome->artifacts);
  *summary = report;
  outcome->summary = "max relative error " + format_short(max_error) +
                     " over " + std::to_string(n) + " couplings";
}

void run_sweep_experiment(const ExperimentConfig& config,
                          const std::string& dir, RunOutcome* outcome,
                          json* summary) {
  const SweepResult result = run_sweep(config);

  std::ostringstream csv;
  csv << "g_2ph,g_ps,fidelity,plateau_spread\r\n";
  for (std::size_t i = 0; i < result.g_2ph_values.size(); ++i) {
    for (std::size_t j = 0; j < result.g_ps_values.size(); ++j) {
      const double f = result.fidelities(static_cast<Eigen::Index>(i),
                                         static_cast<Eigen::Index>(j));
      const double s = result.plateau_spreads(static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(j));
      csv << format_double(result.g_2ph_values[i]) << ','
          << format_double(result.g_ps_values[j]) << ',';
      if (std::isfinite(f)) {
        csv << format_double(f) << ',' << format_double(s);
      } else {
        csv << ',';  // failed point: both fields left empty
      }
      csv << "\r\n";
    }
  }
  write_text(dir, "sweep.csv", csv.str(), &outcome->artifacts);

  HeatmapSpec heatmap;
  heatmap.title = "steady fidelity over engineered couplings";
  heatmap.x_label = "g_2ph / kappa_1ph";
  heatmap.y_label = "g_ps / kappa_1ph";
  heatmap.x_values = result.g_2ph_values;
  heatmap.y_values = result.g_ps_values;
  heatmap.values = result.fidelities;
  heatmap.mark_maximum = true;
  write_text(dir, "sweep.svg", svg_heatmap(heatmap), &outcome->artifacts);

  json report;
  if (result.best_i >= 0) {
    report["best"] = {{"g_2ph", result.g_2ph_values[result.best_i]},
                      {"g_ps", result.g_ps_values[result.best_j]},
                      {"fidelity", result.best_fidelity}};
  } else {
    report["best"] = nullptr;
  }
  report["cells_at_least_0.90"] =
      largest_connected_region(result.fidelities, 0.90);
  report["failed_points"] = result.failures;
  write_text(dir, "sweep.json", json_text(report), &outcome->artifacts);
  *summary = report;
  if (result.best_i >= 0) {
    outcome->summary =
        "best fidelity " + format_short(result.best_fidelity) + " at g_2ph " +
        format_short(result.g_2ph_values[result.best_i]) + ", g_ps " +
        format_short(result.g_ps_values[result.best_j]);
  } else {
    outcome->summary = "sweep produced no successful grid points";
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API.

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::evolve: return "evolve";
    case ExperimentKind::steady: return "steady";
    case ExperimentKind::wigner: return "wigner";
    case ExperimentKind::sweep: return "sweep";
    case ExperimentKind::compare: return "compare";
    case ExperimentKind::reduce: return "reduce";
  }
  return "unknown";
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::effective: return "effective";
    case ModelKind::two_mode: return "two_mode";
    case ModelKind::three_mode: return "three_mode";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (ExperimentKind kind :
       {ExperimentKind::evolve, ExperimentKind::steady, ExperimentKind::wigner,
        ExperimentKind::sweep, ExperimentKind::compare,
        ExperimentKind::reduce}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown experiment \"" + name +
                    "\"; expected evolve, steady, wigner, sweep, compare, or "
                    "reduce");
}

ModelKind model_kind_from_string(const std::string& name) {
  for (ModelKind kind : {ModelKind::effective, ModelKind::two_mode,
                         ModelKind::three_mode}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown model \"" + name +
                    "\"; expected effective, two_mode, or three_mode");
}

std::vector<double> TimeGridSpec::points() const {
  std::vector<double> grid(samples);
  for (int i = 0; i < samples; ++i) {
    grid[i] = t_end * i / (samples - 1);
  }
  return grid;
}

std::vector<double> AxisSpec::points() const {
  if (empty()) return {};
  const int count =
      static_cast<int>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> values(count);
  for (int i = 0; i < count; ++i) values[i] = min + i * step;
  return values;
}

ExperimentConfig config_from_json(const json& j) {
  require_object(j, "config root");
  require_known_keys(
      j, {"experiment", "model", "params", "grid", "output", "seed",
          "full_model"},
      "config");

  ExperimentConfig config;
  if (!j.contains("experiment") || !j.at("experiment").is_string()) {
    throw ConfigError("key \"experiment\" is required and must be a string");
  }
  config.experiment =
      experiment_kind_from_string(j.at("experiment").get<std::string>());
  if (j.contains("model")) {
    if (!j.at("model").is_string()) {
      throw ConfigError("key \"model\" must be a string");
    }
    config.model = model_kind_from_string(j.at("model").get<std::string>());
  }
  if (j.contains("params")) {
    require_object(j.at("params"), "key \"params\"");
    config.params = j.at("params");
  }
  if (j.contains("output")) {
    if (!j.at("output").is_string()) {
      throw ConfigError("key \"output\" must be a string");
    }
    config.output = j.at("output").get<std::string>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) {
      throw ConfigError("key \"seed\" must be an integer");
    }
    config.seed = j.at("seed").get<long>();
  }
  if (j.contains("full_model")) {
    if (!j.at("full_model").is_boolean()) {
      throw ConfigError("key \"full_model\" must be a boolean");
    }
    config.full_model = j.at("full_model").get<bool>();
  }

  const json grid = j.contains("grid") ? j.at("grid") : json::object();
  require_object(grid, "key \"grid\"");
  switch (config.experiment) {
    case ExperimentKind::evolve:
    case ExperimentKind::steady:
    case ExperimentKind::compare:
      require_known_keys(grid, {"t_end", "samples"}, "grid");
      parse_time_grid(grid, &config.time_grid);
      break;
    case ExperimentKind::wigner: {
      require_known_keys(grid, {"x_min", "x_max", "nx", "p_min", "p_max",
                                "np"},
                         "grid");
      WignerGridSpec& w = config.wigner_grid;
      w.x_min = grid_real(grid, "x_min", w.x_min);
      w.x_max = grid_real(grid, "x_max", w.x_max);
      w.p_min = grid_real(grid, "p_min", w.p_min);
      w.p_max = grid_real(grid, "p_max", w.p_max);
      w.nx = grid_int(grid, "nx", w.nx);
      w.np = grid_int(grid, "np", w.np);
      if (!(w.x_max > w.x_min) || !(w.p_max > w.p_min)) {
        throw ConfigError("grid key \"x_max\" must exceed \"x_min\" and "
                          "\"p_max\" must exceed \"p_min\"");
      }
      if (w.nx < 2 || w.np < 2) {
        throw ConfigError("grid keys \"nx\" and \"np\" must be at least 2");
      }
      break;
    }
    case ExperimentKind::sweep: {
      require_known_keys(
          grid, {"g_2ph", "g_ps", "t_end", "samples", "target_alpha"},
          "grid");
      config.g_2ph_axis = grid_axis(grid, "g_2ph");
      config.g_ps_axis = grid_axis(grid, "g_ps");
      parse_time_grid(grid, &config.time_grid);
      if (grid.contains("target_alpha")) {
        config.target_alpha = grid_real(grid, "target_alpha", -1.0);
        if (!(config.target_alpha >= 0.0)) {
          throw ConfigError("grid key \"target_alpha\" must be nonnegative");
        }
      }
      break;
    }
    case ExperimentKind::reduce: {
      require_known_keys(grid, {"deltas"}, "grid");
      if (!grid.contains("deltas") || !grid.at("deltas").is_array() ||
          grid.at("deltas").empty()) {
        throw ConfigError(
            "grid key \"deltas\" is required and must be a nonempty array");
      }
      for (const json& v : grid.at("deltas")) {
        if (!v.is_number() || v.get<double>() < 0.0) {
          throw ConfigError(
              "grid key \"deltas\" must hold nonnegative numbers");
        }
        config.deltas.push_back(v.get<double>());
      }
      break;
    }
  }

  // Validate the referenced parameters against the chosen schema now, so
  // mistakes surface at parse time with source anchors.
  switch (config.experiment) {
    case ExperimentKind::reduce:
      parse_reduce_params(config.params, &config);
      break;
    case ExperimentKind::compare:
      if (config.model != ModelKind::three_mode) {
        throw ConfigError(
            "key \"experiment\": \"compare\" requires model \"three_mode\"");
      }
      three_mode_params_from_json(config.params);
      break;
    case ExperimentKind::sweep:
      if (config.model == ModelKind::two_mode) {
        throw ConfigError("key \"experiment\": \"sweep\" supports models "
                          "\"effective\" and \"three_mode\"");
      }
      three_mode_params_from_json(config.params);
      break;
    default:
      if (config.model == ModelKind::effective) {
        effective_params_from_json(config.params);
      } else {
        three_mode_params_from_json(config.params);
      }
      break;
  }
  return config;
}

json ExperimentConfig::as_json() const {
  json j;
  j["experiment"] = to_string(experiment);
  j["model"] = to_string(model);
  j["params"] = params;
  json grid = json::object();
  switch (experiment) {
    case ExperimentKind::evolve:
    case ExperimentKind::steady:
    case ExperimentKind::compare:
      grid["t_end"] = time_grid.t_end;
      grid["samples"] = time_grid.samples;
      break;
    case ExperimentKind::wigner:
      grid["x_min"] = wigner_grid.x_min;
      grid["x_max"] = wigner_grid.x_max;
      grid["nx"] = wigner_grid.nx;
      grid["p_min"] = wigner_grid.p_min;
      grid["p_max"] = wigner_grid.p_max;
      grid["np"] = wigner_grid.np;
      break;
    case ExperimentKind::sweep:
      grid["g_2ph"] = {g_2ph_axis.min, g_2ph_axis.max, g_2ph_axis.step};
      grid["g_ps"] = {g_ps_axis.min, g_ps_axis.max, g_ps_axis.step};
      grid["t_end"] = time_grid.t_end;
      grid["samples"] = time_grid.samples;
      if (target_alpha >= 0.0) grid["target_alpha"] = target_alpha;
      break;
    case ExperimentKind::reduce:
      grid["deltas"] = deltas;
      break;
  }
  j["grid"] = grid;
  if (!output.empty()) j["output"] = output;
  j["seed"] = seed;
  if (full_model) j["full_model"] = true;
  return j;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source_name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError(source_name + ":" +
                      std::to_string(line_of_byte(text, byte)) + ": " +
                      e.what());
  }
  try {
    return config_from_json(j);
  } catch (const CatstabError& e) {
    throw ConfigError(source_name + ":" +
                      std::to_string(line_of_quoted_token(text, e.what())) +
                      ": " + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path + ": cannot open config file");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

PlateauStats plateau_stats(const std::vector<double>& samples) {
  if (samples.empty()) {
    throw InvalidArgumentError("plateau_stats: no samples");
  }
  const std::size_t tail =
      std::max<std::size_t>(1, samples.size() / 10);
  double sum = 0.0;
  double lo = samples.back();
  double hi = samples.back();
  for (std::size_t i = samples.size() - tail; i < samples.size(); ++i) {
    sum += samples[i];
    lo = std::min(lo, samples[i]);
    hi = std::max(hi, samples[i]);
  }
  PlateauStats stats;
  stats.value = sum / static_cast<double>(tail);
  stats.spread = hi - lo;
  stats.converged = stats.spread < 1e-3;
  return stats;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  if (config.g_2ph_axis.empty() || config.g_ps_axis.empty()) {
    throw ConfigError(
        "sweep requires grid keys \"g_2ph\" and \"g_ps\" as [min, max, "
        "step]");
  }
  const ThreeModeParams base = three_mode_params_from_json(config.params);
  const bool full =
      config.full_model || config.model == ModelKind::three_mode;
  if (full && base.layout.num_modes() != 3) {
    throw ConfigError("three-mode sweep needs key \"layout\" with exactly 3 "
                      "mode dimensions");
  }

  SweepResult result;
  result.g_2ph_values = config.g_2ph_axis.points();
  result.g_ps_values = config.g_ps_axis.points();
  const int n2 = static_cast<int>(result.g_2ph_values.size());
  const int np = static_cast<int>(result.g_ps_values.size());
  result.fidelities.setConstant(n2, np, kNan);
  result.plateau_spreads.setConstant(n2, np, kNan);
  const std::vector<double> t_grid = config.time_grid.points();
  std::vector<std::string> failures(static_cast<std::size_t>(n2) * np);

  parallel_for(static_cast<std::int64_t>(n2) * np, [&](std::int64_t k) {
    const int i = static_cast<int>(k) / np;
    const int j = static_cast<int>(k) % np;
    const double g_2ph = result.g_2ph_values[i];
    const double g_ps = result.g_ps_values[j];
    try {
      TimeSeries series;
      if (full) {
        ThreeModeParams p = base;
        p.g_2ph = g_2ph;
        p.g_ps = g_ps;
        Complex alpha = drive_target_amplitude(p);
        if (config.target_alpha >= 0.0) alpha = config.target_alpha;
        const LindbladModel model = three_mode_model(p);
        const StateVector target = cat_state(
            alpha, CatParity::even, static_cast<int>(p.layout.dim(0)));
        const Observer fid{"fidelity", [&target](const DensityMatrix& rho) {
                             return fidelity(partial_trace(rho, {0}), target);
                           }};
        series = evolve(model, vacuum_density(p.layout), t_grid,
                        PropagatorPlan{}, {fid});
      } else {
        EffectiveParams ep;
        ep.kappa_1ph = base.kappa_1ph;
        ep.kappa_2ph =
            g_2ph > 0.0 ? rate_kappa_2ph(g_2ph, base.kappa_r1) : 0.0;
        ep.kappa_ps =
            g_ps > 0.0 ? rate_kappa_ps(g_ps, base.kappa_r2, base.n_tilde)
                       : 0.0;
        ep.n_tilde = base.n_tilde;
        ep.target_parity = CatParity::even;
        Complex alpha = 0.0;
        if (g_2ph > 0.0) {
          const DriveCalibration calibration =
              alpha_from_drive(base.eps_r1, g_2ph, base.kappa_r1);
          ep.eps_2ph = calibration.eps_2ph;
          alpha = calibration.alpha;
        } else if (base.eps_r1 != 0.0) {
          throw ConfigError("key \"eps_r1\" is nonzero but g_2ph = 0 at this "
                            "grid point, so no drive calibration exists");
        }
        if (config.target_alpha >= 0.0) alpha = config.target_alpha;
        const int dim = std::max(default_storage_dim(std::abs(alpha)),
                                 2 * ep.n_tilde + 2);
        const LindbladModel model = effective_model(ep, dim);
        const StateVector target = cat_state(alpha, CatParity::even, dim);
        const Observer fid{"fidelity", [&target](const DensityMatrix& rho) {
                             return fidelity(rho, target);
                           }};
        series = evolve(model, DensityMatrix::from_pure(fock_state(0, dim)),
                        t_grid, PropagatorPlan{}, {fid});
      }
      const PlateauStats plateau = plateau_stats(series.column("fidelity"));
      result.fidelities(i, j) = plateau.value;
      result.plateau_spreads(i, j) = plateau.spread;
    } catch (const CatstabError& e) {
      failures[static_cast<std::size_t>(k)] =
          "g_2ph=" + format_short(g_2ph) + ", g_ps=" + format_short(g_ps) +
          ": " + e.what();
    }
  });

  for (const std::string& f : failures) {
    if (!f.empty()) result.failures.push_back(f);
  }
  for (int i = 0; i < n2; ++i) {
    for (int j = 0; j < np; ++j) {
      const double v = result.fidelities(i, j);
      if (std::isfinite(v) &&
          (result.best_i < 0 || v > result.best_fidelity)) {
        result.best_fidelity = v;
        result.best_i = i;
        result.best_j = j;
      }
    }
  }
  return result;
}

int largest_connected_region(const Eigen::MatrixXd& fidelities,
                             double threshold) {
  const Eigen::Index rows = fidelities.rows();
  const Eigen::Index cols = fidelities.cols();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen(rows, cols);
  seen.setConstant(false);
  const auto qualifies = [&](Eigen::Index i, Eigen::Index j) {
    const double v = fidelities(i, j);
    return std::isfinite(v) && v >= threshold;
  };
  int best = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (seen(i, j) || !qualifies(i, j)) continue;
      int count = 0;
      std::queue<std::pair<Eigen::Index, Eigen::Index>> frontier;
      frontier.push({i, j});
      seen(i, j) = true;
      while (!frontier.empty()) {
        const auto [a, b] = frontier.front();
        frontier.pop();
        ++count;
        const Eigen::Index di[4] = {1, -1, 0, 0};
        const Eigen::Index dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const Eigen::Index na = a + di[d];
          const Eigen::Index nb = b + dj[d];
          if (na < 0 || na >= rows || nb < 0 || nb >= cols) continue;
          if (seen(na, nb) || !qualifies(na, nb)) continue;
          seen(na, nb) = true;
          frontier.push({na, nb});
        }
      }
      best = std::max(best, count);
    }
  }
  return best;
}

RunOutcome run_experiment(const ExperimentConfig& config,
                          const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  RunOutcome outcome;
  write_text(out_dir, "config.json", json_text(config.as_json()),
             &outcome.artifacts);

  json summary;
  switch (config.experiment) {
    case ExperimentKind::evolve:
      run_evolve_experiment(config, out_dir, &outcome, &summary);
      break;
    case ExperimentKind::steady:
      run_steady_experiment(config, out_dir, &outcome, &summary);
      break;
    case ExperimentKind::wigner:
      run_wigner_experiment(config, out_dir, &outcome, &summary);
      break;
    case ExperimentKind::sweep:
      run_sweep_experiment(config, out_dir, &outcome, &summary);
      break;
    case ExperimentKind::compare:
      run_compare_experiment(config, out_dir, &outcome, &summary);
      break;
    case ExperimentKind::reduce:
      run_reduce_experiment(config, out_dir, &outcome, &summary);
      break;
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  json manifest;
  manifest["experiment"] = to_string(config.experiment);
  manifest["model"] = to_string(config.model);
  manifest["version"] = catstab_version();
  manifest["threads"] = thread_count();
  manifest["artifacts"] = outcome.artifacts;
  manifest["summary"] = summary;
  manifest["timing_seconds"] = elapsed;  // the one non-reproducible field
  write_text(out_dir, "manifest.json", json_text(manifest),
             &outcome.artifacts);
  return outcome;
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const CapacityError*>(&error) != nullptr) return 4;
  if (dynamic_cast<const ConfigError*>(&error) != nullptr ||
      dynamic_cast<const InvalidArgumentError*>(&error) != nullptr ||
      dynamic_cast<const InvalidDimensionError*>(&error) != nullptr ||
      dynamic_cast<const LayoutError*>(&error) != nullptr) {
    return 2;
  }
  return 3;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"cat-state stabilization experiment runner"};
  app.name("catstab");
  std::string experiment_name;
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  bool full_model = false;
  app.add_option("experiment", experiment_name,
                 "one of: evolve, steady, wigner, sweep, compare, reduce")
      ->required();
  app.add_option("--config", config_path, "JSON experiment configuration")
      ->required();
  app.add_option("--out", out_dir,
                 "output directory (overrides the config's \"output\")");
  app.add_option("--threads", threads, "worker thread count");
  app.add_flag("--full-model", full_model,
               "sweep: run the full three-mode model at every grid point");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const ExperimentKind kind = experiment_kind_from_string(experiment_name);
    if (threads < 0) {
      throw ConfigError("option --threads must be positive");
    }
    if (threads > 0) set_thread_count(threads);

    ExperimentConfig config = load_config(config_path);
    if (config.experiment != kind) {
      throw ConfigError(config_path + ": config declares experiment \"" +
                        to_string(config.experiment) + "\" but \"" +
                        experiment_name + "\" was requested");
    }
    if (full_model) {
      config.full_model = true;
      if (kind == ExperimentKind::sweep) config.model = ModelKind::three_mode;
    }
    if (kind == ExperimentKind::sweep &&
        (config.full_model || config.model == ModelKind::three_mode)) {
      warn("sweep: running the full three-mode model at every grid point; "
           "expect a long runtime");
    }

    const std::string dir = !out_dir.empty()
                                ? out_dir
                                : (!config.output.empty()
                                       ? config.output
                                       : "runs/" + to_string(kind));
    const RunOutcome outcome = run_experiment(config, dir);
    out << outcome.summary << "\n";
    for (const std::string& name : outcome.artifacts) {
      out << "wrote " << (std::filesystem::path(dir) / name).string() << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

std::string catstab_version() { return "0.1.0"; }

}  // namespace catstab
