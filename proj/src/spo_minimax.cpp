#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>
#include <limits>

#include "spolab/spo.hpp"

namespace spolab {

namespace {

constexpr double kAlphaLo = 1e-6;
constexpr double kBetaLo = 1e-12;
constexpr double kLogTol = 1e-13;

struct LogTol {
  bool operator()(double a, double b) const { return std::abs(a - b) <= kLogTol; }
};

// Sign-change root of f on [lo, hi] (both > 0), searched in log scale.
template <typename F>
double root_log(F&& f, double lo, double hi, double flo, double fhi) {
  auto g = [&f](double u) { return f(std::exp(u)); };
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(g, std::log(lo), std::log(hi), flo, fhi, LogTol{}, iters);
  return std::exp(0.5 * (r.first + r.second));
}

// Zero of a function that is positive left of its root and negative right of
// it, restricted to [lo, hi]. The bracket grows geometrically from x0 so that
// the extreme ends, where cancellation makes the sign unreliable, are only
// reached when the root is really there.
template <typename F>
double decreasing_root(F&& f, double x0, double lo, double hi) {
  constexpr double kGrow = 4.0;
  x0 = std::clamp(x0, lo, hi);
  const double f0 = f(x0);
  if (f0 == 0.0) return x0;
  double a = x0;
  double fa = f0;
  if (f0 > 0.0) {
    while (a < hi) {
      const double b = std::min(a * kGrow, hi);
      const double fb = f(b);
      if (fb <= 0.0) return fb == 0.0 ? b : root_log(f, a, b, fa, fb);
      a = b;
      fa = fb;
    }
    return hi;
  }
  while (a > lo) {
    const double b = std::max(a / kGrow, lo);
    const double fb = f(b);
    if (fb >= 0.0) return fb == 0.0 ? b : root_log(f, b, a, fb, fa);
    a = b;
    fa = fb;
  }
  return lo;
}

double scale_proxy(const ScalarDist& d) {
  double s = 0.0;
  for (const auto& c : d.components()) {
    if (const auto* p = std::get_if<PointMass>(&c.atom)) s += c.weight * p->value * p->value;
    else if (const auto* g = std::get_if<Gaussian>(&c.atom)) s += c.weight * (g->mean * g->mean + g->variance);
    else {
      const auto& cy = std::get<Cauchy>(c.atom);
      s += c.weight * (cy.location * cy.location + cy.scale * cy.scale);
    }
  }
  return s;
}

double scale_proxy(const EmeProvider& e) {
  switch (e.kind()) {
    case EmeProvider::Kind::SeparableLoss:
    case EmeProvider::Kind::SeparableReg:
      return scale_proxy(e.dist());
    case EmeProvider::Kind::QuadLoss:
    case EmeProvider::Kind::QuadReg:
    case EmeProvider::Kind::SqrtLasso:
      return e.sigma2();
    case EmeProvider::Kind::Block:
      return e.block_signal().second_moment();
    case EmeProvider::Kind::Cone:
      return 0.0;
  }
  return 0.0;
}

struct Psi {
  double value = 0.0;
  double kappa = 0.0;
  double l_dc = 0.0;
};

// inf over tau_g of beta tau_g / 2 + delta L(alpha, tau_g / beta), in kappa = tau_g / beta.
Psi psi(const SpoProblem& p, double alpha, double beta, const MinimaxOptions& o) {
  auto g = [&](double k) { return -(0.5 * beta * beta + p.delta * p.loss.d_tau(alpha, k)); };
  const double k = decreasing_root(g, 1.0, o.tau_lo / beta, o.tau_hi / beta);
  const EmeEval L = p.loss.evaluate(alpha, k);
  return {0.5 * beta * beta * k + p.delta * L.value, k, L.d_c};
}

struct Chi {
  double value = 0.0;
  double tau_h = 0.0;
  double d_beta = 0.0;
  double d_alpha = 0.0;
};

// sup over tau_h of -alpha tau_h / 2 - alpha beta^2 / (2 tau_h) + lambda F(alpha beta / tau_h, alpha lambda / tau_h).
Chi chi(const SpoProblem& p, double alpha, double beta, const MinimaxOptions& o) {
  Chi r;
  if (alpha == 0.0) return r;
  if (p.lambda == 0.0 || p.reg.is_zero()) {
    r.tau_h = beta;
    r.value = -alpha * beta;
    r.d_beta = -alpha;
    r.d_alpha = -beta;
    return r;
  }
  if (p.reg.kind() == EmeProvider::Kind::Cone) {
    const double sd = std::sqrt(p.reg.dbar());
    r.tau_h = beta * sd;
    r.value = -alpha * beta * sd + p.lambda * p.reg.offset();
    r.d_beta = -alpha * sd;
    r.d_alpha = -beta * sd;
    return r;
  }
  const double lam = p.lambda;
  // Search in nu = tau_h / alpha, where F is evaluated at (beta / nu, lambda / nu).
  auto h = [&](double nu) {
    const EmeEval F = p.reg.evaluate(beta / nu, lam / nu);
    return beta * beta - 2.0 * lam * beta * F.d_c - 2.0 * lam * lam * F.d_tau - alpha * alpha * nu * nu;
  };
  const double t = alpha * decreasing_root(h, 1.0, o.tau_lo / alpha, o.tau_hi / alpha);
  const EmeEval F = p.reg.evaluate(alpha * beta / t, alpha * lam / t);
  r.tau_h = t;
  r.value = -0.5 * alpha * t - alpha * beta * beta / (2.0 * t) + lam * F.value;
  r.d_beta = -alpha * beta / t + lam * alpha * F.d_c / t;
  r.d_alpha = -0.5 * t - beta * beta / (2.0 * t) + lam / t * (beta * F.d_c + lam * F.d_tau);
  return r;
}

double default_alpha_max(const SpoProblem& p, const MinimaxOptions& o) {
  if (o.alpha_max > 0.0) return o.alpha_max;
  const double s = std::max({1.0, scale_proxy(p.loss), scale_proxy(p.reg)});
  return 10.0 * std::sqrt(s);
}

// Shared outer search: slope(alpha) is nondecreasing (M convex).
template <typename Profile>
SpoSolution outer_search(Profile&& profile, double alpha_max, const MinimaxOptions& o, const std::string& name) {
  SpoSolution sol;
  sol.method = "minimax";
  int evals = 0;
  auto slope = [&](double a) {
    ++evals;
    return profile(a).slope;
  };
  const double s_lo = slope(kAlphaLo);
  double alpha;
  if (s_lo >= 0.0) {
    alpha = 0.0;
    sol.flags.push_back("alpha_zero");
  } else {
    double hi = alpha_max;
    double s_hi = slope(hi);
    for (int d = 0; d < o.max_doublings && s_hi < 0.0; ++d) {
      hi *= 2.0;
      s_hi = slope(hi);
    }
    if (s_hi < 0.0) throw Unbounded(name + ": objective still decreasing at alpha_max", hi, s_hi);
    alpha = s_hi == 0.0 ? hi : root_log(slope, kAlphaLo, hi, s_lo, s_hi);
    // Flat stretch: move to its left end.
    const ProfilePoint at = profile(alpha);
    const double tol = o.flat_tol * std::max(1.0, std::abs(at.value));
    const double left = alpha * (1.0 - 1e-3);
    if (left > kAlphaLo && profile(left).value - at.value <= tol) {
      double a = kAlphaLo;
      double b = left;
      if (profile(a).value - at.value <= tol) {
        alpha = 0.0;
      } else {
        for (int i = 0; i < 60; ++i) {
          const double m = 0.5 * (a + b);
          if (profile(m).value - at.value <= tol) b = m;
          else a = m;
        }
        alpha = b;
      }
      sol.flags.push_back("flat_minimum");
    }
  }
  const ProfilePoint pt = profile(alpha > 0.0 ? alpha : kAlphaLo);
  sol.alpha = alpha;
  sol.beta = pt.beta;
  sol.kappa = pt.kappa;
  sol.tau_g = pt.kappa * pt.beta;
  sol.tau_h = alpha > 0.0 ? pt.tau_h : 0.0;
  sol.nu = alpha > 0.0 ? pt.tau_h / alpha : pt.tau_h / kAlphaLo;
  sol.iterations = evals;
  sol.residual = std::abs(pt.slope);
  return sol;
}

}  // namespace

double spo_objective(const SpoProblem& p, double alpha, double tau_g, double beta, double tau_h) {
  double d;
  if (beta == 0.0) {
    const double l0 = p.loss.L0();
    if (std::isinf(l0)) throw InfiniteL0AtBoundary("beta = 0 with an infinite L0");
    d = -p.delta * l0;
  } else {
    if (!(tau_g > 0.0)) throw DomainError("tau_g must be positive when beta > 0");
    d = 0.5 * beta * tau_g + p.delta * p.loss.value(alpha, tau_g / beta);
  }
  if (alpha > 0.0) {
    if (!(tau_h > 0.0)) throw DomainError("tau_h must be positive when alpha > 0");
    d += -0.5 * alpha * tau_h - alpha * beta * beta / (2.0 * tau_h);
    if (p.lambda > 0.0) d += p.lambda * p.reg.value(alpha * beta / tau_h, alpha * p.lambda / tau_h);
  }
  return d;
}

ProfilePoint minimax_profile(const SpoProblem& p, double alpha, const MinimaxOptions& o) {
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  struct Eval {
    Psi s;
    Chi c;
    double dphi;
  };
  auto at = [&](double beta) {
    Eval e{psi(p, alpha, beta, o), chi(p, alpha, beta, o), 0.0};
    e.dphi = beta * e.s.kappa + e.c.d_beta;
    return e;
  };
  auto dphi = [&](double beta) { return at(beta).dphi; };
  const double beta = decreasing_root(dphi, 1.0, kBetaLo, o.beta_max);
  const Eval e = at(beta);
  ProfilePoint pt;
  pt.value = e.s.value + e.c.value;
  pt.slope = p.delta * e.s.l_dc + e.c.d_alpha;
  pt.beta = beta;
  pt.kappa = e.s.kappa;
  pt.tau_h = e.c.tau_h;
  return pt;
}

SpoSolution solve_minimax(const SpoProblem& p, const MinimaxOptions& o) {
  p.validate();
  auto profile = [&](double a) { return minimax_profile(p, a, o); };
  SpoSolution s = outer_search(profile, default_alpha_max(p, o), o, "minimax");
  s.cost = s.alpha > 0.0 ? spo_objective(p, s.alpha, s.tau_g, s.beta, s.tau_h) : profile(0.0).value;
  return s;
}

SpoSolution solve_cone(double delta, double dbar, const EmeProvider& loss, const MinimaxOptions& o) {
  if (!(dbar > 0.0 && dbar < 1.0)) throw DomainError("statistical dimension ratio must lie in (0, 1)");
  if (!(delta > dbar)) throw UnstableRegime("cone-constrained prediction needs delta > dbar");
  return solve_minimax(SpoProblem{delta, 1.0, loss, EmeProvider::cone(dbar)}, o);
}

SpoSolution solve_sqrt_lasso(double delta, double sigma2, double lambda, const EmeProvider& reg,
                             const MinimaxOptions& o) {
  const SpoProblem p{delta, lambda, EmeProvider::sqrt_lasso(sigma2, delta), reg};
  p.validate();
  const double sd = std::sqrt(delta);
  auto profile = [&](double alpha) {
    const double q = std::sqrt(alpha * alpha + sigma2);
    auto dphi = [&](double beta) { return sd * q + chi(p, alpha, beta, o).d_beta; };
    double beta;
    const double d1 = dphi(1.0);
    if (d1 >= 0.0) {
      beta = 1.0;
    } else {
      const double dlo = dphi(kBetaLo);
      beta = dlo <= 0.0 ? kBetaLo : root_log(dphi, kBetaLo, 1.0, dlo, d1);
    }
    const Chi c = chi(p, alpha, beta, o);
    ProfilePoint pt;
    pt.value = beta * sd * q + c.value;
    pt.slope = beta * sd * alpha / q + c.d_alpha;
    pt.beta = beta;
    pt.kappa = sd * q / beta;
    pt.tau_h = c.tau_h;
    return pt;
  };
  SpoSolution s = outer_search(profile, default_alpha_max(p, o), o, "square-root LASSO");
  if (s.beta >= 1.0) s.flags.push_back("beta_corner");
  s.cost = s.alpha > 0.0 ? spo_objective(p, s.alpha, s.tau_g, s.beta, s.tau_h) : profile(0.0).value;
  return s;
}

double saddle_violation(const SpoProblem& p, const SpoSolution& s, double step) {
  const double base = spo_objective(p, s.alpha, s.tau_g, s.beta, s.tau_h);
  double worst = 0.0;
  auto h = [step](double v) { return step * std::max(1.0, std::abs(v)); };
  auto probe_min = [&](double a, double tg) {
    if (a < 0.0 || tg <= 0.0) return;
    worst = std::max(worst, base - spo_objective(p, a, tg, s.beta, s.tau_h));
  };
  auto probe_max = [&](double b, double th) {
    if (b < 0.0 || (s.alpha > 0.0 && th <= 0.0)) return;
    if (b == 0.0 && std::isinf(p.loss.L0())) return;
    worst = std::max(worst, spo_objective(p, s.alpha, s.tau_g, b, th) - base);
  };
  if (s.alpha > 0.0) {
    probe_min(s.alpha + h(s.alpha), s.tau_g);
    probe_min(s.alpha - h(s.alpha), s.tau_g);
    probe_max(s.beta, s.tau_h + h(s.tau_h));
    probe_max(s.beta, s.tau_h - h(s.tau_h));
  }
  probe_min(s.alpha, s.tau_g + h(s.tau_g));
  probe_min(s.alpha, s.tau_g - h(s.tau_g));
  probe_max(s.beta + h(s.beta), s.tau_h);
  probe_max(s.beta - h(s.beta), s.tau_h);
  return worst;
}

}  // namespace spolab
