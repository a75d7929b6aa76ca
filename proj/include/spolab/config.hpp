#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spolab/harness.hpp"

namespace spolab {

/// Everything one CLI invocation needs. The file form is JSON:
///
///   {
///     "model":      {"loss": "abs", "reg": "l1",
///                    "noise": "mix(0.7*delta(0), 0.3*normal(0,1))",
///                    "signal": "mix(0.9*delta(0), 0.1*normal(0,10))"},
///     "problem":    {"delta": 1.2, "lambda": 1.0},
///     "experiment": {"n": 768, "lambda_grid": [0.1, 1], "ensemble": "gaussian",
///                    "trials": 5, "seed": 1, "tol": 1e-4, "max_iter": 200000},
///     "sweep":      {"axis": "lambda", "values": [0.1, 0.3, 1]},
///     "output":     {"path": "out.csv", "format": "csv"}
///   }
///
/// Every section and key is optional; unknown ones are rejected. A block
/// signal is written block(t, zero_prob, variance).
struct RunConfig {
  ModelSpec model;
  double delta = 2.0;
  double lambda = 1.0;
  int n = 512;
  std::vector<double> lambda_grid{1.0};
  Ensemble ensemble = Ensemble::Gaussian;
  int trials = 10;
  std::uint64_t seed = 0;
  double tol = 1e-4;
  int max_iter = 200000;
  SweepAxis axis = SweepAxis::Lambda;
  std::vector<double> sweep_values;
  std::string output_path;
  std::string format = "csv";
  std::vector<std::string> notes;

  /// Dotted keys assigned so far by apply_config_text or set_key.
  std::set<std::string> assigned;

  ExperimentConfig experiment() const;
};

/// Parses a signal literal: a ScalarDist literal or block(t, zero_prob, variance).
SignalDist parse_signal(const std::string& text);
std::string signal_to_string(const SignalDist& s);

/// Overlays the JSON document onto cfg. Throws ConfigError whose message
/// carries "line L, column C" for syntax errors and for rejected keys.
/// Returns the dotted keys that the document set.
std::set<std::string> apply_config_text(RunConfig& cfg, const std::string& text);
std::set<std::string> apply_config_file(RunConfig& cfg, const std::string& path);

/// Built-in settings: ls, ridge-ls, cone-ls, genlasso, sqrt-lasso, lad-l1,
/// huber-l1, group-lasso, plus lad-l1-fig2 for the LAD/LASSO comparison.
std::vector<std::string> preset_names();
RunConfig preset(const std::string& name);

/// Canonical JSON of the resolved configuration (no output section).
std::string canonical_json(const RunConfig& cfg);
/// 64-bit FNV-1a of canonical_json, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace spolab
