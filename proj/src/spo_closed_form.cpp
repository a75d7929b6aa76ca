#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "spolab/gauss_poly.hpp"
#include "spolab/spo.hpp"

namespace spolab {

namespace {

constexpr int kBrentBits = 30;

// 2 E[(G - k)_+^2] = 2[(1 + k^2) Q(k) - k phi(k)]
double gauss_tail_square(double k) { return 2.0 * ((1.0 + k * k) * normal_sf(k) - k * normal_pdf(k)); }

template <typename Fn>
std::pair<double, double> brent_min(Fn f, double lo, double hi) {
  std::uintmax_t iters = 500;
  return boost::math::tools::brent_find_minima(f, lo, hi, kBrentBits, iters);
}

}  // namespace

void SpoProblem::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("sampling ratio delta must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and nonnegative");
  if (lambda == 0.0 && !reg.is_zero()) throw DomainError("lambda = 0 requires the zero regularizer");
}

bool SpoSolution::has_flag(const std::string& f) const {
  for (const auto& x : flags) {
    if (x == f) return true;
  }
  return false;
}

std::string SpoSolution::to_json() const {
  nlohmann::ordered_json j;
  j["alpha"] = alpha;
  j["alpha_sq"] = alpha_sq();
  j["beta"] = beta;
  j["nu"] = nu;
  j["kappa"] = kappa;
  j["tau_g"] = tau_g;
  j["tau_h"] = tau_h;
  j["cost"] = cost;
  j["method"] = method;
  j["iterations"] = iterations;
  j["residual"] = residual;
  j["flags"] = flags;
  return j.dump();
}

double closed_ls(double delta, double sigma2) {
  if (!(delta > 1.0)) throw DomainError("least squares needs delta > 1");
  if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be nonnegative");
  return sigma2 / (delta - 1.0);
}

double ridge_kappa(double delta, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("ridge needs lambda > 0");
  if (!(delta > 0.0)) throw DomainError("sampling ratio delta must be positive");
  const double b = 1.0 - delta - lambda;
  return (b + std::sqrt(b * b + 4.0 * lambda)) / (2.0 * lambda);
}

double closed_ridge_ls(double delta, double lambda, double sigma2, double sigmax2) {
  if (!(sigma2 >= 0.0) || !(sigmax2 >= 0.0)) throw DomainError("variances must be nonnegative");
  const double k = ridge_kappa(delta, lambda);
  const double q = delta * k * k / ((1.0 + k) * (1.0 + k));
  return (q * sigma2 + lambda * lambda * sigmax2 * k * k) / (1.0 - q);
}

double closed_cone_ls(double delta, double dbar, double sigma2) {
  if (!(dbar > 0.0 && dbar < 1.0)) throw DomainError("statistical dimension ratio must lie in (0, 1)");
  if (!(delta > dbar)) throw DomainError("cone least squares needs delta > dbar");
  if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be nonnegative");
  return sigma2 * dbar / (delta - dbar);
}

MmseRidge mmse_optimal_ridge(double delta, double sigma2) {
  if (!(delta > 0.0)) throw DomainError("sampling ratio delta must be positive");
  if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be nonnegative");
  MmseRidge r;
  const double s = sigma2;
  r.error = 0.5 * (1.0 - s - delta + std::sqrt((1.0 - delta) * (1.0 - delta) + 2.0 * s * (delta + 1.0) + s * s));
  auto form = [delta, s](double x) {
    const double d = delta - (1.0 - x) * (1.0 - x);
    if (d <= 0.0) return std::numeric_limits<double>::infinity();
    return (delta * x * x + s * (1.0 - x) * (1.0 - x)) / d;
  };
  const double lo = std::max(0.0, 1.0 - std::sqrt(delta));
  const auto [x, v] = brent_min(form, lo + 1e-15, 1.0);
  r.x = x;
  r.x_error = v;
  return r;
}

RecoveryCheck perfect_recovery_check(double delta, double dbar, double sbar) {
  if (!(delta > 0.0)) throw DomainError("sampling ratio delta must be positive");
  if (!(dbar > 0.0 && dbar < 1.0)) throw DomainError("statistical dimension ratio must lie in (0, 1)");
  if (!(sbar > 0.0 && sbar < delta)) throw DomainError("sbar must lie in (0, delta)");
  auto g = [delta, sbar](double k) { return sbar * (1.0 + k * k) + (delta - sbar) * gauss_tail_square(k); };
  // g is convex with g(0) = delta.
  const auto [k, v] = brent_min(g, 0.0, 40.0);
  RecoveryCheck r;
  r.kappa = k;
  r.margin = delta - dbar - v;
  r.holds = r.margin > 0.0;
  return r;
}

RecoveryCheck perfect_recovery_check_noise(double delta, double dbar, double p0) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("noise zero-probability must lie in (0, 1)");
  return perfect_recovery_check(delta, dbar, delta * (1.0 - p0));
}

double l1_statistical_dimension(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("sparsity fraction must lie in (0, 1)");
  auto g = [rho](double t) { return rho * (1.0 + t * t) + (1.0 - rho) * gauss_tail_square(t); };
  return brent_min(g, 0.0, 40.0).second;
}

double stein_crosscheck(const SpoSolution& s, const SpoProblem& p) {
  const auto& L = p.loss;
  if (L.kind() == EmeProvider::Kind::SeparableLoss && L.loss().kind == LossSpec::Kind::Abs) {
    throw NotApplicable("Stein cross-check needs a twice differentiable envelope");
  }
  if (L.kind() != EmeProvider::Kind::SeparableLoss && L.kind() != EmeProvider::Kind::QuadLoss) {
    throw NotApplicable("Stein cross-check needs a separable loss");
  }
  if (s.alpha == 0.0) return 0.0;
  const double kappa = s.kappa > 0.0 ? s.kappa : 1e-12;
  const double lhs = L.d_c(s.alpha, kappa);
  const double rhs = s.alpha * L.mean_curvature(s.alpha, kappa);
  return std::abs(lhs - rhs);
}

}  // namespace spolab
