#include "spolab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace spolab {

namespace {

constexpr double kStepSafety = 0.99;
constexpr double kBalance = 1.5;
constexpr double kAdaptStart = 0.5;
constexpr double kAdaptDecay = 0.95;
constexpr int kCheckpointEvery = 100;

bool is_sqrt_loss(const InstanceLoss& l) { return std::holds_alternative<NonSepLossSpec>(l); }

// out = prox of gamma * L at r.
void loss_prox(const InstanceProblem& p, const Eigen::VectorXd& r, double gamma, Eigen::VectorXd& out) {
  out = r;
  if (is_sqrt_loss(p.loss)) {
    shrink_norm(std::span<double>(out.data(), out.size()), gamma * std::sqrt(static_cast<double>(p.A.cols())));
    return;
  }
  const ScalarFn f = std::get<LossSpec>(p.loss).scalar();
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = prox(f, r[i], gamma);
}

void reg_prox(const InstanceProblem& p, Eigen::VectorXd& v, double gamma) {
  if (gamma == 0.0 || p.reg.kind == RegSpec::Kind::Zero) return;
  if (!p.reg.separable()) {
    const int t = p.reg.block_len;
    for (Eigen::Index b = 0; b < v.size(); b += t) shrink_norm(std::span<double>(v.data() + b, t), gamma);
    return;
  }
  const ScalarFn f = p.reg.scalar();
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = prox(f, v[i], gamma);
}

double loss_value(const InstanceProblem& p, const Eigen::VectorXd& r) {
  if (is_sqrt_loss(p.loss)) return std::sqrt(static_cast<double>(p.A.cols())) * r.norm();
  const ScalarFn f = std::get<LossSpec>(p.loss).scalar();
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += f(r[i]);
  return s;
}

double reg_value(const InstanceProblem& p, const Eigen::VectorXd& x) {
  if (p.reg.kind == RegSpec::Kind::Zero) return 0.0;
  if (!p.reg.separable()) {
    const int t = p.reg.block_len;
    double s = 0.0;
    for (Eigen::Index b = 0; b < x.size(); b += t) s += x.segment(b, t).norm();
    return s;
  }
  const ScalarFn f = p.reg.scalar();
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += f(x[i]);
  return s;
}

}  // namespace

void InstanceProblem::validate() const {
  if (A.rows() < 1 || A.cols() < 1) throw DomainError("the design matrix must be nonempty");
  if (y.size() != A.rows()) throw DomainError("y must have one entry per row of A");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be finite and nonnegative");
  if (!reg.separable() && A.cols() % reg.block_len != 0) {
    throw DomainError("block length must divide the signal dimension");
  }
}

double operator_norm(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * std::sin(static_cast<double>(i) + 1.0);
  v.normalize();
  double est = 0.0;
  double change = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 500; ++k) {
    Eigen::VectorXd w = A.transpose() * (A * v);
    const double nw = w.norm();
    if (nw == 0.0) throw IllConditioned("power iteration hit the null space of A");
    const double next = std::sqrt(nw);
    change = est > 0.0 ? std::abs(next - est) / next : std::numeric_limits<double>::infinity();
    est = next;
    v = w / nw;
    if (k >= 50 && change <= 1e-3) return est;
  }
  throw IllConditioned("power iteration did not settle after 500 steps");
}

double instance_objective(const InstanceProblem& p, const Eigen::VectorXd& x) {
  const Eigen::VectorXd r = p.y - p.A * x;
  return loss_value(p, r) + p.lambda * reg_value(p, x);
}

SolveReport solve_instance(const InstanceProblem& p, double tol, int max_iter) {
  p.validate();
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (max_iter < 1) throw DomainError("max_iter must be at least 1");
  const Eigen::Index m = p.A.rows();
  const Eigen::Index n = p.A.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  // Power iteration underestimates the norm slightly; pad it.
  const double L = operator_norm(p.A) * 1.01;
  double tau = kStepSafety / L;
  double sigma = kStepSafety / L;
  double adapt = kAdaptStart;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ax = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd dual = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd atd = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd x_new(n), ax_new(m), dual_new(m), atd_new(n), q(m), u(m), pres(n), dres(m);
  Eigen::VectorXd window_sum = Eigen::VectorXd::Zero(n);

  SolveReport best;
  best.kkt_residual = std::numeric_limits<double>::infinity();
  std::vector<double> checkpoints;

  for (int k = 1; k <= max_iter; ++k) {
    x_new = x - tau * atd;
    reg_prox(p, x_new, tau * p.lambda);
    ax_new.noalias() = p.A * x_new;
    // Dual step on H(v) = L(y - v) through the Moreau decomposition:
    // prox_{sigma H*}(q) = q - sigma prox_{H / sigma}(q / sigma).
    q = dual + sigma * (2.0 * ax_new - ax);
    loss_prox(p, p.y - q / sigma, 1.0 / sigma, u);
    dual_new = q - sigma * (p.y - u);
    atd_new.noalias() = p.A.transpose() * dual_new;

    pres = (x - x_new) / tau - (atd - atd_new);
    dres = (dual - dual_new) / sigma - (ax - ax_new);
    const double pn = pres.norm();
    const double dn = dres.norm();
    const double res = std::sqrt(pn * pn + dn * dn) * scale;

    x.swap(x_new);
    ax.swap(ax_new);
    dual.swap(dual_new);
    atd.swap(atd_new);

    if (!std::isfinite(res)) throw MaxIterExceeded("splitting iteration diverged", best);
    window_sum += x;
    if (k % kCheckpointEvery == 0) {
      checkpoints.push_back(instance_objective(p, window_sum / kCheckpointEvery));
      window_sum.setZero();
    }
    if (res < best.kkt_residual) {
      best.x = x;
      best.kkt_residual = res;
      best.iterations = k;
    }
    if (res <= tol) {
      SolveReport r;
      r.x = x;
      r.objective = instance_objective(p, x);
      r.kkt_residual = res;
      r.iterations = k;
      r.checkpoints = std::move(checkpoints);
      return r;
    }
    if (pn > kBalance * dn) {
      tau /= 1.0 - adapt;
      sigma *= 1.0 - adapt;
      adapt *= kAdaptDecay;
    } else if (dn > kBalance * pn) {
      tau *= 1.0 - adapt;
      sigma /= 1.0 - adapt;
      adapt *= kAdaptDecay;
    }
  }
  best.objective = instance_objective(p, best.x);
  best.checkpoints = std::move(checkpoints);
  throw MaxIterExceeded("splitting iteration reached max_iter", best);
}

}  // namespace spolab
