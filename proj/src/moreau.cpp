#include "spolab/moreau.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "spolab/errors.hpp"

namespace spolab {

namespace {

constexpr double kTinyTau = 1e-14;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_tau(double tau) {
  if (!(tau > 0.0)) throw DomainError("envelope parameter tau must be positive");
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

double ScalarFn::operator()(double v) const {
  switch (kind) {
    case Kind::Square:
      return 0.5 * v * v;
    case Kind::Abs:
      return std::abs(v);
    case Kind::Huber:
      return std::abs(v) <= rho ? 0.5 * v * v : rho * std::abs(v) - 0.5 * rho * rho;
    case Kind::Zero:
      return 0.0;
  }
  return 0.0;
}

LossSpec LossSpec::huber(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("Huber parameter must be positive");
  return {Kind::Huber, rho};
}

ScalarFn LossSpec::scalar() const {
  switch (kind) {
    case Kind::Square:
      return {ScalarFn::Kind::Square, 1.0};
    case Kind::Abs:
      return {ScalarFn::Kind::Abs, 1.0};
    case Kind::Huber:
      return {ScalarFn::Kind::Huber, rho};
    case Kind::Zero:
      return {ScalarFn::Kind::Zero, 1.0};
  }
  return {};
}

std::string LossSpec::name() const {
  switch (kind) {
    case Kind::Square:
      return "square";
    case Kind::Abs:
      return "abs";
    case Kind::Huber: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "huber(%g)", rho);
      return buf;
    }
    case Kind::Zero:
      return "zero";
  }
  return "";
}

RegSpec RegSpec::block_l2(int t) {
  if (t < 1) throw DomainError("block length must be at least 1");
  return {Kind::BlockL2, t};
}

ScalarFn RegSpec::scalar() const {
  switch (kind) {
    case Kind::L1:
      return {ScalarFn::Kind::Abs, 1.0};
    case Kind::HalfSquare:
      return {ScalarFn::Kind::Square, 1.0};
    case Kind::Zero:
      return {ScalarFn::Kind::Zero, 1.0};
    case Kind::BlockL2:
      if (block_len == 1) return {ScalarFn::Kind::Abs, 1.0};
      throw DomainError("block_l2 with t > 1 is not coordinatewise");
  }
  return {};
}

std::string RegSpec::name() const {
  switch (kind) {
    case Kind::L1:
      return "l1";
    case Kind::HalfSquare:
      return "ridge";
    case Kind::Zero:
      return "zero";
    case Kind::BlockL2:
      return "block_l2(" + std::to_string(block_len) + ")";
  }
  return "";
}

ConeRegSpec::ConeRegSpec(double dbar) : stat_dim_ratio(dbar) {
  if (!(dbar > 0.0 && dbar < 1.0)) throw DomainError("statistical dimension ratio must lie in (0, 1)");
}

std::string ConeRegSpec::name() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "cone(%g)", stat_dim_ratio);
  return buf;
}

double prox(const ScalarFn& f, double x, double tau) {
  check_tau(tau);
  if (tau < kTinyTau) return x;
  switch (f.kind) {
    case ScalarFn::Kind::Square:
      return x / (1.0 + tau);
    case ScalarFn::Kind::Abs:
      return sign(x) * std::max(std::abs(x) - tau, 0.0);
    case ScalarFn::Kind::Huber:
      return std::abs(x) <= f.rho * (1.0 + tau) ? x / (1.0 + tau) : x - tau * f.rho * sign(x);
    case ScalarFn::Kind::Zero:
      return x;
  }
  return x;
}

double env(const ScalarFn& f, double x, double tau) {
  check_tau(tau);
  switch (f.kind) {
    case ScalarFn::Kind::Square:
      return x * x / (2.0 * (1.0 + tau));
    case ScalarFn::Kind::Abs:
      return std::abs(x) <= tau ? x * x / (2.0 * tau) : std::abs(x) - 0.5 * tau;
    case ScalarFn::Kind::Huber: {
      const double knee = f.rho * (1.0 + tau);
      return std::abs(x) <= knee ? x * x / (2.0 * (1.0 + tau)) : f.rho * std::abs(x) - 0.5 * f.rho * knee;
    }
    case ScalarFn::Kind::Zero:
      return 0.0;
  }
  return 0.0;
}

double env_dx(const ScalarFn& f, double x, double tau) {
  check_tau(tau);
  switch (f.kind) {
    case ScalarFn::Kind::Square:
      return x / (1.0 + tau);
    case ScalarFn::Kind::Abs:
      return std::clamp(x / tau, -1.0, 1.0);
    case ScalarFn::Kind::Huber:
      return std::clamp(x / (1.0 + tau), -f.rho, f.rho);
    case ScalarFn::Kind::Zero:
      return 0.0;
  }
  return 0.0;
}

double env_dtau(const ScalarFn& f, double x, double tau) {
  const double d = env_dx(f, x, tau);
  return -0.5 * d * d;
}

double conj_env(const ScalarFn& f, double y, double sigma) {
  check_tau(sigma);
  switch (f.kind) {
    case ScalarFn::Kind::Abs: {
      // f* is the indicator of [-1, 1].
      const double d = std::max(std::abs(y) - 1.0, 0.0);
      return d * d / (2.0 * sigma);
    }
    case ScalarFn::Kind::Square:
      return y * y / (2.0 * (1.0 + sigma));
    case ScalarFn::Kind::Zero:
      return y * y / (2.0 * sigma);
    case ScalarFn::Kind::Huber: {
      const double tau = 1.0 / sigma;
      const double x = y * tau;
      return x * x / (2.0 * tau) - env(f, x, tau);
    }
  }
  return 0.0;
}

double block_env(int t, double r, double tau) {
  if (t < 1) throw DomainError("block length must be at least 1");
  if (!(r >= 0.0)) throw DomainError("block radius must be nonnegative");
  check_tau(tau);
  return r <= tau ? r * r / (2.0 * tau) : r - 0.5 * tau;
}

void shrink_norm(std::span<double> v, double thr) {
  double sq = 0.0;
  for (double e : v) sq += e * e;
  const double norm = std::sqrt(sq);
  const double scale = norm > thr ? 1.0 - thr / norm : 0.0;
  for (double& e : v) e *= scale;
}

PiecewisePoly value_poly(const ScalarFn& f) {
  PiecewisePoly p;
  switch (f.kind) {
    case ScalarFn::Kind::Square:
      p.add(-kInf, kInf, 0.0, 0.0, 0.5);
      break;
    case ScalarFn::Kind::Abs:
      p.add(-kInf, 0.0, 0.0, -1.0);
      p.add(0.0, kInf, 0.0, 1.0);
      break;
    case ScalarFn::Kind::Huber:
      p.add(-kInf, -f.rho, -0.5 * f.rho * f.rho, -f.rho);
      p.add(-f.rho, f.rho, 0.0, 0.0, 0.5);
      p.add(f.rho, kInf, -0.5 * f.rho * f.rho, f.rho);
      break;
    case ScalarFn::Kind::Zero:
      p.add(-kInf, kInf, 0.0);
      break;
  }
  return p;
}

PiecewisePoly env_poly(const ScalarFn& f, double tau) {
  check_tau(tau);
  PiecewisePoly p;
  switch (f.kind) {
    case ScalarFn::Kind::Square:
      p.add(-kInf, kInf, 0.0, 0.0, 1.0 / (2.0 * (1.0 + tau)));
      break;
    case ScalarFn::Kind::Abs:
      p.add(-kInf, -tau, -0.5 * tau, -1.0);
      p.add(-tau, tau, 0.0, 0.0, 1.0 / (2.0 * tau));
      p.add(tau, kInf, -0.5 * tau, 1.0);
      break;
    case ScalarFn::Kind::Huber: {
      const double knee = f.rho * (1.0 + tau);
      const double c0 = -0.5 * f.rho * knee;
      p.add(-kInf, -knee, c0, -f.rho);
      p.add(-knee, knee, 0.0, 0.0, 1.0 / (2.0 * (1.0 + tau)));
      p.add(knee, kInf, c0, f.rho);
      break;
    }
    case ScalarFn::Kind::Zero:
      p.add(-kInf, kInf, 0.0);
      break;
  }
  return p;
}

PiecewisePoly env_dx_poly(const ScalarFn& f, double tau) {
  check_tau(tau);
  PiecewisePoly p;
  switch (f.kind) {
    case ScalarFn::Kind::Square:
      p.add(-kInf, kInf, 0.0, 1.0 / (1.0 + tau));
      break;
    case ScalarFn::Kind::Abs:
      p.add(-kInf, -tau, -1.0);
      p.add(-tau, tau, 0.0, 1.0 / tau);
      p.add(tau, kInf, 1.0);
      break;
    case ScalarFn::Kind::Huber: {
      const double knee = f.rho * (1.0 + tau);
      p.add(-kInf, -knee, -f.rho);
      p.add(-knee, knee, 0.0, 1.0 / (1.0 + tau));
      p.add(knee, kInf, f.rho);
      break;
    }
    case ScalarFn::Kind::Zero:
      p.add(-kInf, kInf, 0.0);
      break;
  }
  return p;
}

}  // namespace spolab
