#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spolab/dist.hpp"
#include "spolab/estimator.hpp"
#include "spolab/spo.hpp"

namespace spolab {

using SignalDist = std::variant<ScalarDist, BlockSignalDist>;

/// Parsed catalog entries. Loss names: square, abs, huber(rho), sqrt_l2.
/// Regularizer names: l1, ridge, zero, block_l2(t), cone(Dbar).
InstanceLoss parse_loss_name(const std::string& name);
std::variant<RegSpec, ConeRegSpec> parse_reg_name(const std::string& name);
std::string loss_name(const InstanceLoss& loss);

/// Loss, regularizer and the two distributions; everything a prediction needs
/// apart from delta and lambda.
struct ModelSpec {
  std::string loss = "square";
  std::string reg = "ridge";
  ScalarDist noise = ScalarDist::normal(0.0, 1.0);
  SignalDist signal = ScalarDist::normal(0.0, 1.0);

  /// Names resolve, the signal kind matches the regularizer, and Cauchy noise
  /// only meets a loss with bounded slope. Throws ConfigError otherwise.
  void validate() const;
};

/// Expected envelopes for a model. The loss side uses the noise law; square
/// loss and ridge reduce to their second-moment closed forms.
EmeProvider loss_provider(const ModelSpec& m, double delta);
EmeProvider reg_provider(const ModelSpec& m);

/// Predicted solution at (delta, lambda), choosing the solver by structure:
/// sqrt_l2 -> square-root LASSO; cone -> cone solver; zero regularizer or
/// lambda = 0 -> unregularized system; otherwise the four-equation recursion,
/// falling back to the minimax solver (flag "minimax_fallback") when it fails.
SpoSolution predict(const ModelSpec& m, double delta, double lambda);

enum class Ensemble { Gaussian, Bernoulli };
std::string ensemble_name(Ensemble e);
Ensemble parse_ensemble(const std::string& s);

struct ExperimentConfig {
  ModelSpec model;
  int n = 512;
  double delta = 1.0;
  std::vector<double> lambda_grid{1.0};
  Ensemble ensemble = Ensemble::Gaussian;
  int trials = 10;
  std::uint64_t seed = 0;
  double tol = 1e-4;
  int max_iter = 200000;

  int m() const;
  /// n >= 8, trials >= 1, lambda grid nonempty, sorted and nonnegative, and a
  /// simulable model (no cone constraint). Throws ConfigError.
  void validate() const;
};

struct Instance {
  InstanceProblem problem;
  Eigen::VectorXd x0;
};

/// A, x0 and z from independent streams keyed by (seed, trial, role);
/// y = A x0 + z. The instance does not depend on lambda.
Instance gen_instance(const ExperimentConfig& cfg, std::uint64_t trial, double lambda);

struct ResultRow {
  double lambda = 0.0;
  double delta = 0.0;
  int n = 0;
  int trials = 0;
  double predicted_alpha_sq = 0.0;  // NaN when the prediction failed
  double empirical_mean = 0.0;
  double empirical_std = 0.0;
  std::string solver_method;
  std::vector<std::string> flags;
  std::string loss;
  std::string reg;
  std::vector<double> trial_errors;  // not serialized

  /// Prediction failed, no trial produced an error, or an estimator failed or hit max_iter.
  bool failed() const;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  bool any_failed() const;
};

/// Worker threads for trials: SPOLAB_THREADS when set and positive, else the
/// hardware concurrency.
int thread_count();

/// Every (lambda, trial) pair is solved independently; per-row failures are
/// recorded in flags and never abort the sweep.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

enum class SweepAxis { Lambda, Delta };
/// Lambda axis: one experiment over the given grid. Delta axis: one experiment
/// per value, each over cfg.lambda_grid.
ExperimentResult sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values);

/// Mean and sample standard deviation with a summation order that does not
/// depend on the input order (sorted, then pairwise).
std::pair<double, double> mean_std(std::vector<double> v);

std::string to_csv(const ExperimentResult& r);
std::string to_json(const ExperimentResult& r);
ExperimentResult from_csv(const std::string& text);
ExperimentResult from_json(const std::string& text);

}  // namespace spolab
