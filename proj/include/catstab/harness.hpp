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
//
// Experiment orchestration: JSON configuration loading, named experiments
// (time evolution, steady states, phase-space maps, parameter sweeps, model
// comparison, elimination validation), artifact persistence, and the
// command-line driver.
//
// Every experiment is described by one JSON document:
//
//   {
//     "experiment": "evolve" | "steady" | "wigner" | "sweep" | "compare"
//                   | "reduce",
//     "model": "effective" | "two_mode" | "three_mode",
//     "params": { ... keys of the chosen model's parameter set ... },
//     "grid": { ... experiment-specific grid, see below ... },
//     "output": "runs/my-run",           // optional, overridable on the CLI
//     "seed": 0                          // optional; reserved (dynamics are
//   }                                    // deterministic)
//
// Grid keys by experiment:
//   evolve / compare / steady:  "t_end" (> 0), "samples" (>= 2)
//   wigner:  "x_min", "x_max", "nx", "p_min", "p_max", "np"
//   sweep:   "g_2ph": [min, max, step], "g_ps": [min, max, step],
//            "t_end", "samples", optional "target_alpha" (fixed target
//            amplitude; omitted = per-point drive calibration)
//   reduce:  "deltas": [ ... ]  (params: "n_tilde", "ladder")
//
// A run writes one directory: config.json (as run), the experiment's CSV /
// JSON / SVG artifacts, and manifest.json last (its presence marks a
// completed run).  Given the same configuration and build, all CSV and SVG
// bytes are reproducible; manifest timing fields are the one exception.

#ifndef CATSTAB_HARNESS_HPP
#define CATSTAB_HARNESS_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "catstab/lindblad.hpp"
#include "catstab/observables.hpp"
#include "catstab/reduction.hpp"

namespace catstab {

enum class ExperimentKind { evolve, steady, wigner, sweep, compare, reduce };
enum class ModelKind { effective, two_mode, three_mode };

std::string to_string(ExperimentKind kind);
std::string to_string(ModelKind kind);
// Both throw ConfigError on unrecognized names.
ExperimentKind experiment_kind_from_string(const std::string& name);
ModelKind model_kind_from_string(const std::string& name);

struct TimeGridSpec {
  double t_end = 1.0;  // units of the single-photon lifetime
  int samples = 200;
  // Uniform grid from 0 to t_end inclusive.
  std::vector<double> points() const;
};

// Closed range walked in uniform steps: min, min + step, ..., max.
struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  double step = 0.0;
  bool empty() const { return step <= 0.0; }
  std::vector<double> points() const;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::evolve;
  ModelKind model = ModelKind::effective;
  // Raw model parameters; validated against the model schema at parse time.
  nlohmann::json params = nlohmann::json::object();
  TimeGridSpec time_grid;
  // Sweep-only fields.
  AxisSpec g_2ph_axis;
  AxisSpec g_ps_axis;
  // Fixed target amplitude for sweep fidelities; negative means "calibrate
  // from the drive at each grid point".
  double target_alpha = -1.0;
  // Reduce-only fields.
  std::vector<double> deltas;
  int n_tilde = 2;
  CascadeLadder ladder = CascadeLadder::descending;
  // Wigner-only field.
  WignerGridSpec wigner_grid;
  std::string output;
  long seed = 0;
  // Allows the sweep to run the full three-mode model per grid point.
  bool full_model = false;

  // Canonical as-run form; config_from_json(as_json()) reproduces the config.
  nlohmann::json as_json() const;
};

// Throws ConfigError on unknown keys, missing required keys, or values
// outside their domain.  Model parameters are validated eagerly.
ExperimentConfig config_from_json(const nlohmann::json& j);
// Parses JSON text; errors carry "source_name:line:" anchors.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source_name);
ExperimentConfig load_config(const std::string& path);

// Mean, spread (max - min), and convergence flag (spread < 1e-3) of the last
// tenth of a sampled curve.
struct PlateauStats {
  double value = 0.0;
  double spread = 0.0;
  bool converged = false;
};
PlateauStats plateau_stats(const std::vector<double>& samples);

struct SweepResult {
  std::vector<double> g_2ph_values;
  std::vector<double> g_ps_values;
  // fidelities(i, j): plateau fidelity at (g_2ph_values[i], g_ps_values[j]);
  // NaN marks a grid point whose evolution failed (recorded, not fatal).
  Eigen::MatrixXd fidelities;
  Eigen::MatrixXd plateau_spreads;
  int best_i = -1;
  int best_j = -1;
  double best_fidelity = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> failures;
};

// Evolves one model per grid point (effective-mapped by default, full
// three-mode when the config requests it) and reports plateau fidelities to
// the target cat.  Points run in the worker pool; assembly is deterministic.
SweepResult run_sweep(const ExperimentConfig& config);

// Size of the largest 4-connected cell region with fidelity >= threshold.
int largest_connected_region(const Eigen::MatrixXd& fidelities,
                             double threshold);

struct RunOutcome {
  std::string summary;                 // one human-readable result line
  std::vector<std::string> artifacts;  // file names written under out_dir
};

// Executes the configured experiment and persists its artifacts under
// out_dir (created if needed).  Throws on failure; on success the directory
// holds config.json, the experiment artifacts, and manifest.json.
RunOutcome run_experiment(const ExperimentConfig& config,
                          const std::string& out_dir);

// Process exit code for an error: 2 for configuration and argument errors,
// 4 for capacity refusals, 3 for numerical failures and everything else.
int exit_code_for(const std::exception& error);

// Full command-line driver ("<experiment> --config <path> [--out <dir>]
// [--threads N] [--full-model]").  Arguments exclude the program name.
// Returns the process exit code; 0 on success.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

std::string catstab_version();

}  // namespace catstab

#endif  // CATSTAB_HARNESS_HPP
