#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "spolab/errors.hpp"
#include "spolab/moreau.hpp"

namespace spolab {

using InstanceLoss = std::variant<LossSpec, NonSepLossSpec>;

/// min_x L(y - A x) + lambda f(x) with A of size m x n.
struct InstanceProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd y;
  InstanceLoss loss = LossSpec::square();
  RegSpec reg = RegSpec::l1();
  double lambda = 0.0;

  /// Throws DomainError on inconsistent sizes, empty data, a negative lambda
  /// or a block length that does not divide n.
  void validate() const;
};

struct SolveReport {
  Eigen::VectorXd x;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Objective every 100 iterations, evaluated at the running average of the
  /// iterates since the previous checkpoint.
  std::vector<double> checkpoints;
};

class MaxIterExceeded : public Error {
 public:
  MaxIterExceeded(const std::string& what, SolveReport best) : Error(what), report(std::move(best)) {}
  SolveReport report;
};

class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// Largest singular value by power iteration on A^T A: 50 steps, then more
/// (up to 500) while the relative change exceeds 1e-3.
double operator_norm(const Eigen::MatrixXd& A);

double instance_objective(const InstanceProblem& p, const Eigen::VectorXd& x);

/// Primal-dual proximal splitting with adaptive balancing of the primal and
/// dual step sizes (their product stays at 0.99^2 / ||A||^2). Stops when the
/// KKT residual, the norm of both subgradient residuals divided by sqrt(n),
/// is at most tol. Never stops before the first full iteration.
SolveReport solve_instance(const InstanceProblem& p, double tol = 1e-8, int max_iter = 200000);

}  // namespace spolab
