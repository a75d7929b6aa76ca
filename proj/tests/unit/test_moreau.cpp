#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "spolab/errors.hpp"
#include "spolab/moreau.hpp"
#include "spolab/rng.hpp"

using namespace spolab;

namespace {

const ScalarFn kAbs{ScalarFn::Kind::Abs, 1.0};
const ScalarFn kSquare{ScalarFn::Kind::Square, 1.0};
const ScalarFn kZero{ScalarFn::Kind::Zero, 1.0};
const ScalarFn kHuber{ScalarFn::Kind::Huber, 1.0};

double huber(double v, double rho) { return std::abs(v) <= rho ? 0.5 * v * v : rho * std::abs(v) - 0.5 * rho * rho; }

// Dense grid then golden refinement of v -> (x - v)^2 / (2 tau) + g(v).
template <typename G>
std::pair<double, double> grid_min(double x, double tau, G g) {
  auto obj = [&](double v) { return (x - v) * (x - v) / (2 * tau) + g(v); };
  const double lo = x - 20.0;
  const double hi = x + 20.0;
  const int n = 400001;
  double best = lo;
  double bv = obj(lo);
  for (int i = 1; i < n; ++i) {
    const double v = lo + (hi - lo) * i / (n - 1);
    const double o = obj(v);
    if (o < bv) bv = o, best = v;
  }
  double a = best - 1e-4, b = best + 1e-4;
  for (int k = 0; k < 100; ++k) {
    const double m1 = a + 0.382 * (b - a), m2 = a + 0.618 * (b - a);
    if (obj(m1) < obj(m2)) b = m2;
    else a = m1;
  }
  const double v = 0.5 * (a + b);
  return {v, obj(v)};
}

}  // namespace

TEST(Moreau, ProxExamples) {
  EXPECT_DOUBLE_EQ(prox(kZero, 3.7, 2.0), 3.7);
  EXPECT_DOUBLE_EQ(prox(kAbs, 0.5, 1.0), 0.0);
  const auto oracle = grid_min(3.0, 1.0, [](double v) { return huber(v, 1.0); });
  EXPECT_NEAR(oracle.first, 2.0, 1e-6);
  EXPECT_NEAR(prox(kHuber, 3.0, 1.0), oracle.first, 1e-6);
}

TEST(Moreau, EnvelopeExamples) {
  EXPECT_DOUBLE_EQ(env(kZero, 1.234, 1.0), 0.0);
  const auto abs_oracle = grid_min(2.0, 1.0, [](double v) { return std::abs(v); });
  EXPECT_NEAR(abs_oracle.second, 1.5, 1e-9);
  EXPECT_NEAR(env(kAbs, 2.0, 1.0), abs_oracle.second, 1e-9);
  const auto sq_oracle = grid_min(2.0, 1.0, [](double v) { return 0.5 * v * v; });
  EXPECT_NEAR(env(kSquare, 2.0, 1.0), sq_oracle.second, 1e-9);
  EXPECT_NEAR(env(kSquare, 2.0, 1.0), 1.0, 1e-15);
}

TEST(Moreau, EnvelopeMatchesGridOracleForHuber) {
  CounterRng rng(8, {0});
  for (int k = 0; k < 10; ++k) {
    const double x = 10 * rng.uniform_open() - 5;
    const double tau = 0.1 + 3 * rng.uniform_open();
    const auto o = grid_min(x, tau, [](double v) { return huber(v, 1.0); });
    EXPECT_NEAR(env(kHuber, x, tau), o.second, 1e-9);
    EXPECT_NEAR(prox(kHuber, x, tau), o.first, 1e-5);
  }
}

TEST(Moreau, DerivativeExamples) {
  EXPECT_DOUBLE_EQ(env_dx(kAbs, 5.0, 1.0), 1.0);
  const double h = 1e-5;
  EXPECT_NEAR((env(kAbs, 5 + h, 1) - env(kAbs, 5 - h, 1)) / (2 * h), 1.0, 1e-8);
  EXPECT_NEAR(env_dx(kHuber, 0.5, 1.0), 0.25, 1e-15);
  EXPECT_NEAR((env(kHuber, 0.5 + h, 1) - env(kHuber, 0.5 - h, 1)) / (2 * h), 0.25, 1e-8);
  // Fixed point of the prox: both derivatives vanish.
  EXPECT_EQ(env_dx(kAbs, 0.0, 1.0), 0.0);
  EXPECT_EQ(env_dtau(kAbs, 0.0, 1.0), 0.0);
  EXPECT_EQ(env_dx(kZero, 4.0, 2.0), 0.0);
  EXPECT_EQ(env_dtau(kZero, 4.0, 2.0), 0.0);
}

TEST(Moreau, DerivativesMatchCentralDifferences) {
  CounterRng rng(12, {0});
  const double h = 1e-5;
  for (const ScalarFn& f : {kAbs, kSquare, kHuber, ScalarFn{ScalarFn::Kind::Huber, 0.7}}) {
    int checked = 0;
    while (checked < 300) {
      const double x = 8 * rng.uniform_open() - 4;
      const double tau = 0.05 + 2 * rng.uniform_open();
      // Keep away from branch boundaries, where central differences straddle a kink in the second derivative.
      const double b1 = f.kind == ScalarFn::Kind::Abs ? tau : f.rho * (1 + tau);
      if (std::abs(std::abs(x) - b1) < 1e-3) continue;
      const double dx = (env(f, x + h, tau) - env(f, x - h, tau)) / (2 * h);
      const double dt = (env(f, x, tau + h) - env(f, x, tau - h)) / (2 * h);
      const double ex = env_dx(f, x, tau);
      const double et = env_dtau(f, x, tau);
      EXPECT_LE(std::abs(dx - ex), 1e-6 * std::max(1.0, std::abs(ex)));
      EXPECT_LE(std::abs(dt - et), 1e-6 * std::max(1.0, std::abs(et)));
      ++checked;
    }
  }
}

TEST(Moreau, DerivativesContinuousAcrossBranches) {
  for (double tau : {0.3, 1.0, 2.5}) {
    const double b = 1.0 * (1 + tau);
    EXPECT_NEAR(env_dx(kHuber, b - 1e-12, tau), env_dx(kHuber, b + 1e-12, tau), 1e-10);
    EXPECT_NEAR(env_dx(kAbs, tau - 1e-12, tau), env_dx(kAbs, tau + 1e-12, tau), 1e-10);
    EXPECT_NEAR(env_dtau(kAbs, tau - 1e-12, tau), env_dtau(kAbs, tau + 1e-12, tau), 1e-10);
  }
}

TEST(Moreau, ConjugateIdentity) {
  CounterRng rng(31, {0});
  for (const ScalarFn& f : {kAbs, kSquare}) {
    for (int k = 0; k < 1000; ++k) {
      const double x = 20 * rng.uniform_open() - 10;
      const double tau = 0.01 + 5 * rng.uniform_open();
      const double lhs = env(f, x, tau) + conj_env(f, x / tau, 1.0 / tau);
      EXPECT_NEAR(lhs, x * x / (2 * tau), 1e-10 * std::max(1.0, x * x / (2 * tau)));
    }
  }
}

TEST(Moreau, HuberConjugateEnvelopeMatchesGridOracle) {
  // h_1^*(y) = y^2 / 2 on [-1, 1], +inf outside.
  auto hstar = [](double y) { return std::abs(y) <= 1 ? 0.5 * y * y : std::numeric_limits<double>::infinity(); };
  for (double y : {-2.0, -0.4, 0.3, 1.7}) {
    for (double s : {0.5, 1.0, 2.0}) {
      const auto o = grid_min(y, s, hstar);
      EXPECT_NEAR(conj_env(kHuber, y, s), o.second, 1e-8);
    }
  }
}

TEST(Moreau, ProxOptimalityForAbs) {
  CounterRng rng(4, {0});
  for (int k = 0; k < 500; ++k) {
    const double x = 6 * rng.uniform_open() - 3;
    const double tau = 0.1 + 2 * rng.uniform_open();
    const double p = prox(kAbs, x, tau);
    const double g = (x - p) / tau;
    if (p == 0.0) {
      EXPECT_LE(std::abs(g), 1.0 + 1e-12);
    } else {
      EXPECT_NEAR(g, p > 0 ? 1.0 : -1.0, 1e-12);
    }
  }
}

TEST(Moreau, EnvelopeMonotoneAndConvex) {
  CounterRng rng(6, {0});
  for (const ScalarFn& f : {kAbs, kSquare, kHuber}) {
    for (int k = 0; k < 300; ++k) {
      const double x1 = 8 * rng.uniform_open() - 4, t1 = 0.05 + 3 * rng.uniform_open();
      const double x2 = 8 * rng.uniform_open() - 4, t2 = 0.05 + 3 * rng.uniform_open();
      const double w = rng.uniform_open();
      const double mid = env(f, w * x1 + (1 - w) * x2, w * t1 + (1 - w) * t2);
      EXPECT_LE(mid, w * env(f, x1, t1) + (1 - w) * env(f, x2, t2) + 1e-10);
      EXPECT_LE(env(f, x1, t1 + 0.5), env(f, x1, t1) + 1e-15);
      EXPECT_LE(env(f, x1, t1), f(x1) + 1e-15);
    }
  }
}

TEST(Moreau, ProxIsNonexpansive) {
  CounterRng rng(9, {0});
  for (const ScalarFn& f : {kAbs, kSquare, kHuber, kZero}) {
    for (int k = 0; k < 1000; ++k) {
      const double x = 10 * rng.uniform_open() - 5, y = 10 * rng.uniform_open() - 5;
      const double tau = 0.01 + 3 * rng.uniform_open();
      EXPECT_LE(std::abs(prox(f, x, tau) - prox(f, y, tau)), std::abs(x - y) + 1e-15);
    }
  }
}

TEST(Moreau, TinyTauShortCircuits) {
  EXPECT_EQ(prox(kAbs, 0.3, 1e-15), 0.3);
  EXPECT_THROW(prox(kAbs, 1.0, 0.0), DomainError);
  EXPECT_THROW(env(kSquare, 1.0, -1.0), DomainError);
}

TEST(Moreau, BlockEnvelope) {
  EXPECT_EQ(block_env(3, 0.0, 1.0), 0.0);
  // Grid oracle in R^3 at the point (2, 0, 0): min_v |x - v|^2 / 2 + ||v||.
  double best = std::numeric_limits<double>::infinity();
  const int n = 161;
  for (int i = 0; i < n; ++i) {
    const double a = 0.0 + 2.5 * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double b = -0.5 + 1.0 * j / (n - 1);
      for (int k = 0; k < n; ++k) {
        const double c = -0.5 + 1.0 * k / (n - 1);
        const double o = 0.5 * ((2 - a) * (2 - a) + b * b + c * c) + std::sqrt(a * a + b * b + c * c);
        best = std::min(best, o);
      }
    }
  }
  EXPECT_NEAR(block_env(3, 2.0, 1.0), best, 1e-3);
  EXPECT_DOUBLE_EQ(block_env(3, 2.0, 1.0), 1.5);
  for (double r : {0.3, 1.0, 4.0}) EXPECT_DOUBLE_EQ(block_env(1, r, 1.3), env(kAbs, r, 1.3));
}

TEST(Moreau, ShrinkNorm) {
  std::vector<double> v = {3.0, 4.0};
  shrink_norm(v, 2.5);
  EXPECT_NEAR(v[0], 1.5, 1e-15);
  EXPECT_NEAR(v[1], 2.0, 1e-15);
  std::vector<double> w = {0.1, -0.2};
  shrink_norm(w, 1.0);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_EQ(w[1], 0.0);
}

TEST(Moreau, CatalogNames) {
  EXPECT_EQ(LossSpec::huber(1.0).name(), "huber(1)");
  EXPECT_EQ(RegSpec::half_square().name(), "ridge");
  EXPECT_EQ(RegSpec::block_l2(3).name(), "block_l2(3)");
  EXPECT_THROW(LossSpec::huber(0.0), DomainError);
  EXPECT_THROW(ConeRegSpec(1.0), DomainError);
}
