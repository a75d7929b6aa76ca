#pragma once

#include <string>
#include <vector>

#include "spolab/eme.hpp"
#include "spolab/errors.hpp"

namespace spolab {

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, int iterations, double residual)
      : Error(what), iterations(iterations), residual(residual) {}
  int iterations;
  double residual;
};

/// An iterate reached alpha <= 1e-12: the prediction is alpha* = 0.
class DegenerateSolution : public Error {
 public:
  DegenerateSolution(const std::string& what, int iterations) : Error(what), iterations(iterations) {}
  int iterations;
};

class Unbounded : public Error {
 public:
  Unbounded(const std::string& what, double alpha_max, double slope)
      : Error(what), alpha_max(alpha_max), slope(slope) {}
  double alpha_max;
  double slope;
};

class InfiniteL0AtBoundary : public Error {
 public:
  using Error::Error;
};

/// Sampling ratio, regularization weight and the two expected envelopes.
struct SpoProblem {
  double delta = 1.0;
  double lambda = 0.0;
  EmeProvider loss = EmeProvider::quad_loss(1.0);
  EmeProvider reg = EmeProvider::zero();

  /// Throws DomainError unless delta > 0, lambda >= 0 and lambda = 0 only with a zero regularizer.
  void validate() const;
};

struct SpoSolution {
  double alpha = 0.0;
  double beta = 0.0;
  double nu = 0.0;
  double kappa = 0.0;
  double tau_g = 0.0;
  double tau_h = 0.0;
  double cost = 0.0;
  int iterations = 0;
  double residual = 0.0;
  std::string method;  // "fixed-point", "minimax" or "closed-form"
  std::vector<std::string> flags;

  double alpha_sq() const { return alpha * alpha; }
  bool has_flag(const std::string& f) const;
  /// {alpha, alpha_sq, beta, nu, kappa, tau_g, tau_h, cost, method, iterations, residual, flags[]}
  std::string to_json() const;
};

struct FixedPointOptions {
  double damping = 0.5;
  double tol = 1e-9;
  int max_iter = 20000;
  double init[4] = {1.0, 1.0, 1.0, 1.0};
};

/// Damped Jacobi recursion on t = (alpha, beta, nu, kappa) of the four
/// stationarity equations. Requires lambda > 0.
SpoSolution solve_fixed_point(const SpoProblem& p, const FixedPointOptions& opts = {});

/// Two-equation recursion on (alpha, kappa) when there is no regularizer.
/// Throws UnstableRegime for delta <= 1.
SpoSolution solve_unregularized(double delta, const EmeProvider& loss, const FixedPointOptions& opts = {});

/// Two-equation recursion on (alpha, kappa) for the ridge regularizer x^2/2
/// with signal second moment sigmax2.
SpoSolution solve_ridge_system(double delta, double lambda, const EmeProvider& loss, double sigmax2,
                               const FixedPointOptions& opts = {});

/// Two-equation recursion on (alpha, beta) for the square loss with noise variance sigma2.
SpoSolution solve_genlasso_system(double delta, double lambda, double sigma2, const EmeProvider& reg,
                                  const FixedPointOptions& opts = {});

struct MinimaxOptions {
  double alpha_max = 0.0;  // 0 selects 10 * max(1, sqrt of the noise and signal scale proxies)
  int max_doublings = 2;
  double tau_lo = 1e-12;
  double tau_hi = 1e6;
  double beta_max = 1e4;
  double flat_tol = 1e-10;
};

/// One value of the profile M(alpha) = sup_beta inf_tau_g sup_tau_h D, with
/// the inner optimizers and the slope dM/dalpha.
struct ProfilePoint {
  double value = 0.0;
  double slope = 0.0;
  double beta = 0.0;
  double kappa = 0.0;
  double tau_h = 0.0;
};

ProfilePoint minimax_profile(const SpoProblem& p, double alpha, const MinimaxOptions& opts = {});

/// D(alpha, tau_g, beta, tau_h) with the limit conventions at alpha = 0 and
/// beta = 0. Throws InfiniteL0AtBoundary for beta = 0 when L0 is infinite.
double spo_objective(const SpoProblem& p, double alpha, double tau_g, double beta, double tau_h);

/// Convex-concave minimax of D: convex outer search over alpha, concave
/// search over beta, and closed inner problems over tau_g and tau_h.
SpoSolution solve_minimax(const SpoProblem& p, const MinimaxOptions& opts = {});

/// Cone-constrained problem; throws UnstableRegime for delta <= dbar.
SpoSolution solve_cone(double delta, double dbar, const EmeProvider& loss, const MinimaxOptions& opts = {});

/// Square-root LASSO through the reduced problem with beta in [0, 1].
SpoSolution solve_sqrt_lasso(double delta, double sigma2, double lambda, const EmeProvider& reg,
                             const MinimaxOptions& opts = {});

/// Largest one-sided violation of the saddle inequalities when each of alpha,
/// tau_g, beta, tau_h is moved by +-step (relative to max(1, value)).
double saddle_violation(const SpoProblem& p, const SpoSolution& s, double step = 1e-4);

// Closed forms.
double closed_ls(double delta, double sigma2);
double ridge_kappa(double delta, double lambda);
double closed_ridge_ls(double delta, double lambda, double sigma2, double sigmax2);
double closed_cone_ls(double delta, double dbar, double sigma2);

struct MmseRidge {
  double error = 0.0;   // closed-form optimum
  double x = 0.0;       // minimizer of the x-parametrized error on (0, 1)
  double x_error = 0.0; // value of that form at x
};
MmseRidge mmse_optimal_ridge(double delta, double sigma2);

struct RecoveryCheck {
  bool holds = false;
  double margin = 0.0;
  double kappa = 0.0;
};

/// LAD with noise that is exactly zero on a fraction of entries, cone-constrained
/// with statistical dimension ratio dbar. sbar = delta * P(Z != 0) in (0, delta).
RecoveryCheck perfect_recovery_check(double delta, double dbar, double sbar);
/// Same check from the noise zero-probability p0: sbar = delta * (1 - p0).
RecoveryCheck perfect_recovery_check_noise(double delta, double dbar, double p0);

/// Statistical dimension ratio of the l1 descent cone at a signal with a
/// fraction rho of nonzero entries.
double l1_statistical_dimension(double rho);

/// |E[e'(alpha G + Z; kappa) G] - alpha E[e''(alpha G + Z; kappa)]| at a solution.
/// Throws NotApplicable for the absolute-value loss.
double stein_crosscheck(const SpoSolution& s, const SpoProblem& p);

}  // namespace spolab
