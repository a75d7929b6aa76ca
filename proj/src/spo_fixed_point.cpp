#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "spolab/spo.hpp"

namespace spolab {

namespace {

constexpr double kAlphaFloor = 1e-12;
constexpr double kPositiveFloor = 1e-300;

template <std::size_t N>
struct Iterate {
  std::array<double, N> t{};
  int iterations = 0;
  double residual = 0.0;
};

// Damped recursion t <- (1 - theta) t + theta S(t). theta is halved when the
// residual change flips sign twice in a row.
template <std::size_t N, typename Map>
Iterate<N> damped(std::array<double, N> t, Map&& S, const FixedPointOptions& opts, const std::string& name) {
  double theta = opts.damping;
  double prev_res = -1.0;
  int prev_sign = 0;
  int flips = 0;
  for (int k = 1; k <= opts.max_iter; ++k) {
    const std::array<double, N> s = S(t);
    double res = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (!std::isfinite(s[i])) throw NoConvergence(name + ": iterate left the finite range", k, INFINITY);
      res = std::max(res, std::abs(s[i] - t[i]));
    }
    if (res <= opts.tol) return {s, k, res};
    for (std::size_t i = 0; i < N; ++i) t[i] = (1.0 - theta) * t[i] + theta * s[i];
    if (t[0] <= kAlphaFloor) throw DegenerateSolution(name + ": alpha collapsed to zero", k);
    if (prev_res >= 0.0) {
      const int sign = res > prev_res ? 1 : (res < prev_res ? -1 : 0);
      flips = (sign != 0 && prev_sign != 0 && sign != prev_sign) ? flips + 1 : 0;
      if (flips >= 2) {
        theta = std::max(0.5 * theta, 1.0 / 1024.0);
        flips = 0;
      }
      prev_sign = sign;
    }
    prev_res = res;
    if (k == opts.max_iter) throw NoConvergence(name + ": iteration limit reached", k, res);
  }
  throw NoConvergence(name + ": iteration limit reached", opts.max_iter, prev_res);
}

double pos(double v) { return std::max(v, kPositiveFloor); }

SpoSolution finish(const SpoProblem& p, double alpha, double beta, double nu, double kappa, int iters, double res) {
  SpoSolution s;
  s.alpha = alpha;
  s.beta = beta;
  s.nu = nu;
  s.kappa = kappa;
  s.tau_g = kappa * beta;
  s.tau_h = nu * alpha;
  s.iterations = iters;
  s.residual = res;
  s.method = "fixed-point";
  s.cost = spo_objective(p, s.alpha, s.tau_g, s.beta, s.tau_h);
  return s;
}

}  // namespace

SpoSolution solve_fixed_point(const SpoProblem& p, const FixedPointOptions& opts) {
  p.validate();
  if (!(p.lambda > 0.0)) throw DomainError("the four-equation recursion needs lambda > 0");
  const double delta = p.delta;
  const double lambda = p.lambda;
  auto S = [&](const std::array<double, 4>& t) {
    const double alpha = pos(t[0]);
    const double beta = pos(t[1]);
    const double nu = pos(t[2]);
    const double kappa = pos(t[3]);
    const EmeEval F = p.reg.evaluate(beta / nu, lambda / nu);
    const EmeEval L = p.loss.evaluate(alpha, kappa);
    const double r = lambda / nu;
    const double a2 = r * r * (-2.0 * F.d_tau) - 2.0 * lambda * beta / (nu * nu) * F.d_c + beta * beta / (nu * nu);
    std::array<double, 4> s;
    s[0] = std::sqrt(std::max(a2, 0.0));
    s[1] = std::sqrt(std::max(delta * (-2.0 * L.d_tau), 0.0));
    s[2] = delta * L.d_c / alpha;
    s[3] = 1.0 / nu - lambda * F.d_c / (nu * beta);
    return s;
  };
  const std::array<double, 4> t0 = {opts.init[0], opts.init[1], opts.init[2], opts.init[3]};
  const auto it = damped(t0, S, opts, "fixed point");
  const auto& t = it.t;
  return finish(p, t[0], t[1], t[2], t[3], it.iterations, it.residual);
}

SpoSolution solve_unregularized(double delta, const EmeProvider& loss, const FixedPointOptions& opts) {
  if (!(delta > 1.0)) throw UnstableRegime("without regularization a stable prediction needs delta > 1");
  SpoProblem p{delta, 0.0, loss, EmeProvider::zero()};
  auto S = [&](const std::array<double, 2>& t) {
    const double alpha = pos(t[0]);
    const double kappa = pos(t[1]);
    const EmeEval L = loss.evaluate(alpha, kappa);
    return std::array<double, 2>{std::sqrt(std::max(delta * kappa * kappa * (-2.0 * L.d_tau), 0.0)),
                                 alpha / (delta * L.d_c)};
  };
  const auto it = damped(std::array<double, 2>{opts.init[0], opts.init[3]}, S, opts, "unregularized");
  const double alpha = it.t[0];
  const double kappa = it.t[1];
  const EmeEval L = loss.evaluate(alpha, kappa);
  return finish(p, alpha, std::sqrt(delta * (-2.0 * L.d_tau)), delta * L.d_c / alpha, kappa, it.iterations,
                it.residual);
}

SpoSolution solve_ridge_system(double delta, double lambda, const EmeProvider& loss, double sigmax2,
                               const FixedPointOptions& opts) {
  if (!(lambda > 0.0)) throw DomainError("ridge needs lambda > 0");
  SpoProblem p{delta, lambda, loss, EmeProvider::quad_reg(sigmax2)};
  p.validate();
  auto S = [&](const std::array<double, 2>& t) {
    const double alpha = pos(t[0]);
    const double kappa = pos(t[1]);
    const EmeEval L = loss.evaluate(alpha, kappa);
    const double a2 = delta * kappa * kappa * (-2.0 * L.d_tau) + lambda * lambda * kappa * kappa * sigmax2;
    return std::array<double, 2>{std::sqrt(std::max(a2, 0.0)), alpha / (delta * L.d_c + lambda * alpha)};
  };
  const auto it = damped(std::array<double, 2>{opts.init[0], opts.init[3]}, S, opts, "ridge system");
  const double alpha = it.t[0];
  const double kappa = it.t[1];
  const EmeEval L = loss.evaluate(alpha, kappa);
  return finish(p, alpha, std::sqrt(delta * (-2.0 * L.d_tau)), delta * L.d_c / alpha, kappa, it.iterations,
                it.residual);
}

SpoSolution solve_genlasso_system(double delta, double lambda, double sigma2, const EmeProvider& reg,
                                  const FixedPointOptions& opts) {
  if (!(lambda > 0.0)) throw DomainError("generalized LASSO needs lambda > 0");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("noise variance must lie in (0, inf)");
  SpoProblem p{delta, lambda, EmeProvider::quad_loss(sigma2), reg};
  p.validate();
  const double sd = std::sqrt(delta);
  auto S = [&](const std::array<double, 2>& t) {
    const double alpha = pos(t[0]);
    const double beta = pos(t[1]);
    const double q = alpha * alpha + sigma2;
    const double s = std::sqrt(q / delta);
    const EmeEval F = reg.evaluate(s, lambda * s / beta);
    const double r = lambda / beta;
    const double R = r * r * (-2.0 * F.d_tau) - 2.0 * r * F.d_c + 1.0;
    // R >= delta has no finite alpha; push alpha up and let the iteration report it.
    const double a_next = R < delta ? std::sqrt(std::max(R * sigma2 / (delta - R), 0.0)) : 2.0 * alpha + 1.0;
    const double k = sd / std::sqrt(q);
    const double b = delta - 1.0;
    const double disc = std::max(b * b + 4.0 * k * lambda * F.d_c, 0.0);
    return std::array<double, 2>{a_next, (b + std::sqrt(disc)) / (2.0 * k)};
  };
  const auto it = damped(std::array<double, 2>{opts.init[0], opts.init[1]}, S, opts, "generalized LASSO");
  const double alpha = it.t[0];
  const double beta = it.t[1];
  const double sq = std::sqrt(alpha * alpha + sigma2);
  const double kappa = sd * sq / beta - 1.0;
  return finish(p, alpha, beta, sd * beta / sq, kappa, it.iterations, it.residual);
}

}  // namespace spolab
