#include "spolab/eme.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <cstdio>
#include <limits>

#include "spolab/errors.hpp"

namespace spolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_tau(double tau) {
  if (!(tau > 0.0)) throw DomainError("envelope parameter tau must be positive");
}

void check_variance(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be finite and nonnegative");
}

// Contribution of one atom X = cG + Z with Z ~ N(mean, var) (var = 0 for a point).
struct AtomPolys {
  const ScalarFn* f;
  const PiecewisePoly* env;
  const PiecewisePoly* dx;
  const PiecewisePoly* dx2;
  const PiecewisePoly* fval;
};

EmeEval atom_terms(const AtomPolys& P, double c, double mean, double var) {
  const double s = std::sqrt(c * c + var);
  const PiecewisePoly polys[3] = {*P.env, P.dx->times_affine(mean), *P.dx2};
  double out[3];
  gaussian_expectations(polys, 3, mean, s, out);
  EmeEval r;
  const double base = var == 0.0 ? (*P.f)(mean) : gaussian_expectation(*P.fval, mean, std::sqrt(var));
  r.value = out[0] - base;
  // E[e'(X) G] = (c / s^2) E[e'(X)(X - mean)] since E[G | X] = c (X - mean) / s^2.
  r.d_c = s > 0.0 ? c / (s * s) * out[1] : 0.0;
  r.d_tau = -0.5 * out[2];
  return r;
}

template <typename Fn>
void for_each_atom(const ScalarDist& dist, Fn&& fn) {
  for (const auto& comp : dist.components()) {
    if (comp.weight == 0.0) continue;
    if (const auto* p = std::get_if<PointMass>(&comp.atom)) {
      fn(comp.weight, p->value, 0.0);
    } else if (const auto* g = std::get_if<Gaussian>(&comp.atom)) {
      fn(comp.weight, g->mean, g->variance);
    } else {
      const auto& cy = std::get<Cauchy>(comp.atom);
      const QuadRule& rule = tail_mapped_rule();
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        fn(comp.weight * rule.weights[k], cy.location + cy.scale * rule.nodes[k], 0.0);
      }
    }
  }
}

// E[chi_t] = sqrt(2) Gamma((t+1)/2) / Gamma(t/2).
double chi_mean(int t) {
  return std::sqrt(2.0) * std::exp(std::lgamma(0.5 * (t + 1)) - std::lgamma(0.5 * t));
}

struct RadialMoments {
  double env = 0.0;    // E[block_env(a chi_t, tau)]
  double d_a = 0.0;    // d/da of env
  double dx_sq = 0.0;  // E[min(R / tau, 1)^2]
};

RadialMoments radial_moments(int t, double a, double tau) {
  RadialMoments m;
  if (a < 1e-150) return m;
  const double x = 0.5 * (tau / a) * (tau / a);
  if (!std::isfinite(x)) return m;
  const double half = 0.5 * t;
  const double p_inner = boost::math::gamma_p(half + 1.0, x);
  const double q_outer = boost::math::gamma_q(half, x);
  const double q_mid = boost::math::gamma_q(half + 0.5, x);
  const double k = chi_mean(t);
  const double er2 = a * a * t * p_inner;  // E[R^2 1{R <= tau}]
  const double er = a * k * q_mid;         // E[R 1{R > tau}]
  m.env = er2 / (2.0 * tau) + er - 0.5 * tau * q_outer;
  m.d_a = a / tau * t * p_inner + k * q_mid;
  m.dx_sq = er2 / (tau * tau) + q_outer;
  return m;
}

}  // namespace

EmeProvider EmeProvider::separable_loss(LossSpec loss, ScalarDist noise) {
  if (noise.has_cauchy() && loss.kind != LossSpec::Kind::Abs && loss.kind != LossSpec::Kind::Huber) {
    throw InadmissiblePair("loss '" + loss.name() + "' needs finite noise moments, got " + noise.to_string());
  }
  EmeProvider p;
  p.kind_ = Kind::SeparableLoss;
  p.loss_ = loss;
  p.dist_ = std::move(noise);
  if (p.dist_.has_cauchy() && loss.kind != LossSpec::Kind::Zero) {
    p.base_l0_ = kInf;
  } else {
    p.base_l0_ = expectation(p.dist_, 0.0, value_poly(loss.scalar()));
  }
  return p;
}

EmeProvider EmeProvider::separable_reg(RegSpec reg, ScalarDist signal) {
  if (signal.has_cauchy()) throw InadmissiblePair("signal distribution must not have a Cauchy component");
  if (!reg.separable()) throw DomainError("use EmeProvider::block for block_l2 with t > 1");
  EmeProvider p;
  p.kind_ = Kind::SeparableReg;
  p.reg_ = reg;
  p.dist_ = std::move(signal);
  p.base_l0_ = expectation(p.dist_, 0.0, value_poly(reg.scalar()));
  return p;
}

EmeProvider EmeProvider::quad_loss(double sigma2) {
  check_variance(sigma2, "noise variance");
  EmeProvider p;
  p.kind_ = Kind::QuadLoss;
  p.sigma2_ = sigma2;
  p.base_l0_ = 0.5 * sigma2;
  return p;
}

EmeProvider EmeProvider::quad_reg(double sigmax2) {
  check_variance(sigmax2, "signal variance");
  EmeProvider p;
  p.kind_ = Kind::QuadReg;
  p.sigma2_ = sigmax2;
  p.base_l0_ = 0.5 * sigmax2;
  return p;
}

EmeProvider EmeProvider::sqrt_lasso(double sigma2, double delta) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("noise variance must lie in (0, inf)");
  if (!(delta > 0.0)) throw DomainError("sampling ratio must be positive");
  EmeProvider p;
  p.kind_ = Kind::SqrtLasso;
  p.sigma2_ = sigma2;
  p.delta_ = delta;
  p.base_l0_ = std::sqrt(sigma2 / delta);
  return p;
}

EmeProvider EmeProvider::cone(double dbar) {
  EmeProvider p;
  p.kind_ = Kind::Cone;
  p.dbar_ = ConeRegSpec(dbar).stat_dim_ratio;
  return p;
}

EmeProvider EmeProvider::block(BlockSignalDist signal) {
  EmeProvider p;
  p.kind_ = Kind::Block;
  p.reg_ = RegSpec::block_l2(signal.block_len);
  p.block_ = signal;
  p.base_l0_ = (1.0 - signal.zero_prob) * std::sqrt(signal.active_variance) * chi_mean(signal.block_len) /
               signal.block_len;
  return p;
}

EmeProvider EmeProvider::zero() { return separable_reg(RegSpec::zero(), ScalarDist::point(0.0)); }

EmeProvider EmeProvider::shifted(double offset) const {
  EmeProvider p = *this;
  p.offset_ += offset;
  return p;
}

bool EmeProvider::is_zero() const {
  return (kind_ == Kind::SeparableReg && reg_.kind == RegSpec::Kind::Zero) ||
         (kind_ == Kind::SeparableLoss && loss_.kind == LossSpec::Kind::Zero);
}

EmeEval EmeProvider::separable(const ScalarFn& f, double c, double tau) const {
  const PiecewisePoly envp = env_poly(f, tau);
  const PiecewisePoly dxp = env_dx_poly(f, tau);
  const PiecewisePoly dx2 = dxp.squared();
  const PiecewisePoly fval = value_poly(f);
  const AtomPolys P{&f, &envp, &dxp, &dx2, &fval};
  EmeEval total;
  for_each_atom(dist_, [&](double w, double mean, double var) {
    const EmeEval r = atom_terms(P, c, mean, var);
    total.value += w * r.value;
    total.d_c += w * r.d_c;
    total.d_tau += w * r.d_tau;
  });
  return total;
}

EmeEval EmeProvider::block_eval(double c, double tau) const {
  const int t = block_.block_len;
  const double p0 = block_.zero_prob;
  EmeEval r;
  const double a_act = std::sqrt(c * c + block_.active_variance);
  const RadialMoments act = radial_moments(t, a_act, tau);
  const RadialMoments zer = radial_moments(t, std::abs(c), tau);
  const double norm_x0 = (1.0 - p0) * std::sqrt(block_.active_variance) * chi_mean(t);
  r.value = ((1.0 - p0) * act.env + p0 * zer.env - norm_x0) / t;
  const double dc_act = a_act > 0.0 ? act.d_a * c / a_act : 0.0;
  const double dc_zer = c > 0.0 ? zer.d_a : (c < 0.0 ? -zer.d_a : 0.0);
  r.d_c = ((1.0 - p0) * dc_act + p0 * dc_zer) / t;
  r.d_tau = -0.5 * ((1.0 - p0) * act.dx_sq + p0 * zer.dx_sq) / t;
  return r;
}

EmeEval EmeProvider::evaluate(double c, double tau) const {
  check_tau(tau);
  if (!std::isfinite(c)) throw DomainError("c must be finite");
  EmeEval r;
  switch (kind_) {
    case Kind::SeparableLoss:
      r = separable(loss_.scalar(), c, tau);
      break;
    case Kind::SeparableReg:
      r = separable(reg_.scalar(), c, tau);
      break;
    case Kind::QuadLoss:
    case Kind::QuadReg: {
      const double q = c * c + sigma2_;
      r.value = q / (2.0 * (1.0 + tau)) - 0.5 * sigma2_;
      r.d_c = c / (1.0 + tau);
      r.d_tau = -q / (2.0 * (1.0 + tau) * (1.0 + tau));
      break;
    }
    case Kind::SqrtLasso: {
      const double q = c * c + sigma2_;
      const double s = std::sqrt(q);
      const double sd = std::sqrt(delta_);
      if (sd * s >= tau) {
        r.value = (s - std::sqrt(sigma2_)) / sd - tau / (2.0 * delta_);
        r.d_c = c / (sd * s);
        r.d_tau = -1.0 / (2.0 * delta_);
      } else {
        r.value = q / (2.0 * tau) - std::sqrt(sigma2_) / sd;
        r.d_c = c / tau;
        r.d_tau = -q / (2.0 * tau * tau);
      }
      break;
    }
    case Kind::Cone: {
      const double k = 1.0 - dbar_;
      r.value = c * c * k / (2.0 * tau);
      r.d_c = c * k / tau;
      r.d_tau = -c * c * k / (2.0 * tau * tau);
      break;
    }
    case Kind::Block:
      r = block_eval(c, tau);
      break;
  }
  r.value += offset_;
  return r;
}

double EmeProvider::L0() const {
  if (kind_ == Kind::Cone) return 0.0;
  return base_l0_ - offset_;
}

double EmeProvider::mean_curvature(double c, double tau, double h) const {
  check_tau(tau);
  if (kind_ == Kind::QuadLoss || kind_ == Kind::QuadReg) return 1.0 / (1.0 + tau);
  if (kind_ != Kind::SeparableLoss && kind_ != Kind::SeparableReg) {
    throw NotApplicable("mean curvature is only defined for separable providers");
  }
  const ScalarFn f = kind_ == Kind::SeparableLoss ? loss_.scalar() : reg_.scalar();
  if (f.kind == ScalarFn::Kind::Abs) throw NotApplicable("the absolute-value envelope has no curvature outside [-tau, tau]");
  const PiecewisePoly dxp = env_dx_poly(f, tau);
  double total = 0.0;
  for_each_atom(dist_, [&](double w, double mean, double var) {
    const double s = std::sqrt(c * c + var);
    const double up = gaussian_expectation(dxp, mean + h, s);
    const double dn = gaussian_expectation(dxp, mean - h, s);
    total += w * (up - dn) / (2.0 * h);
  });
  return total;
}

std::string EmeProvider::describe() const {
  char buf[160];
  switch (kind_) {
    case Kind::SeparableLoss:
      return "separable_loss(" + loss_.name() + ", " + dist_.to_string() + ")";
    case Kind::SeparableReg:
      return "separable_reg(" + reg_.name() + ", " + dist_.to_string() + ")";
    case Kind::QuadLoss:
      std::snprintf(buf, sizeof(buf), "quad_loss(sigma2=%g)", sigma2_);
      return buf;
    case Kind::QuadReg:
      std::snprintf(buf, sizeof(buf), "quad_reg(sigmax2=%g)", sigma2_);
      return buf;
    case Kind::SqrtLasso:
      std::snprintf(buf, sizeof(buf), "sqrt_lasso(sigma2=%g, delta=%g)", sigma2_, delta_);
      return buf;
    case Kind::Cone:
      std::snprintf(buf, sizeof(buf), "cone(dbar=%g)", dbar_);
      return buf;
    case Kind::Block:
      std::snprintf(buf, sizeof(buf), "block_l2(t=%d, zero_prob=%g, active_variance=%g)", block_.block_len,
                    block_.zero_prob, block_.active_variance);
      return buf;
  }
  return "";
}

}  // namespace spolab
