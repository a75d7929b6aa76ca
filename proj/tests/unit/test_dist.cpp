#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spolab/dist.hpp"
#include "spolab/errors.hpp"

using namespace spolab;

TEST(Dist, PointMassSamplesAreConstant) {
  CounterRng rng(1, {0});
  const auto v = ScalarDist::point(0.0).sample(rng, 5);
  EXPECT_EQ(v, std::vector<double>(5, 0.0));
}

TEST(Dist, SparseMixtureZeroFraction) {
  const ScalarDist d = parse_dist("mix(0.9*delta(0), 0.1*normal(0, 10))");
  CounterRng rng(2024, {7});
  const std::size_t n = 1000000;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) zeros += d.sample_one(rng) == 0.0;
  const double frac = static_cast<double>(zeros) / n;
  EXPECT_GE(frac, 0.899);
  EXPECT_LE(frac, 0.901);
}

TEST(Dist, CauchyMedian) {
  CounterRng rng(99, {3});
  auto v = ScalarDist::cauchy(0.0, 1.0).sample(rng, 1000000);
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  EXPECT_LE(std::abs(v[v.size() / 2]), 0.01);
}

TEST(Dist, ValidatesWeightsAndAtoms) {
  EXPECT_THROW(parse_dist("mix(0.5*delta(0), 0.4*normal(0,1))"), Error);
  EXPECT_THROW(parse_dist("normal(0, -1)"), Error);
  EXPECT_THROW(parse_dist("cauchy(0, 0)"), Error);
  EXPECT_THROW(ScalarDist({{-0.1, PointMass{0}}, {1.1, PointMass{1}}}), Error);
}

TEST(Dist, ZeroVarianceGaussianBecomesPointMass) {
  const ScalarDist d = ScalarDist::normal(2.5, 0.0);
  ASSERT_EQ(d.components().size(), 1u);
  EXPECT_TRUE(std::holds_alternative<PointMass>(d.components()[0].atom));
  EXPECT_DOUBLE_EQ(d.atom_probability(2.5), 1.0);
}

TEST(Dist, ParserIsCaseAndSpaceTolerant) {
  const ScalarDist a = parse_dist("MIX( 0.9 * Delta(0) ,0.1*NORMAL(0,10) )");
  const ScalarDist b = parse_dist("mix(0.9*delta(0), 0.1*normal(0, 10))");
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(parse_dist(a.to_string()) == a);
}

TEST(Dist, ParserReportsColumn) {
  try {
    parse_dist("mix(0.9*delta(0), 0.1*nromal(0, 10))");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
  }
}

TEST(Dist, SecondMomentInfiniteForCauchy) {
  EXPECT_TRUE(std::isinf(parse_dist("mix(0.9*delta(0), 0.1*cauchy(0,1))").second_moment()));
  EXPECT_NEAR(parse_dist("mix(0.9*delta(0), 0.1*normal(0,10))").second_moment(), 1.0, 1e-15);
  EXPECT_THROW(ScalarDist::cauchy(0, 1).mean(), DomainError);
}

TEST(Dist, HermiteRuleWeightsAndMoments) {
  const QuadRule& r = gauss_hermite_rule(81);
  ASSERT_EQ(r.nodes.size(), 81u);
  EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-10);
  // Even moments of N(0,1): E G^2k = (2k-1)!!
  double m2 = 0, m4 = 0, m6 = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    const double x2 = r.nodes[i] * r.nodes[i];
    m2 += r.weights[i] * x2;
    m4 += r.weights[i] * x2 * x2;
    m6 += r.weights[i] * x2 * x2 * x2;
  }
  EXPECT_NEAR(m2, 1.0, 1e-10);
  EXPECT_NEAR(m4, 3.0, 1e-9);
  EXPECT_NEAR(m6, 15.0, 1e-8);
}

TEST(Dist, ExpectationExamples) {
  auto sq = [](double x) { return x * x; };
  EXPECT_EQ(expectation(ScalarDist::point(0.0), 0.0, sq), 0.0);
  EXPECT_NEAR(expectation(ScalarDist::normal(0, 1), 1.0, sq), 2.0, 1e-9);
  auto sign_sq = [](double x) { return x == 0.0 ? 0.0 : 1.0; };
  EXPECT_NEAR(expectation(ScalarDist::cauchy(0, 1), 0.0, sign_sq), 1.0, 1e-9);
}

TEST(Dist, ExpectationRejectsGrowthAgainstCauchy) {
  auto sq = [](double x) { return x * x; };
  EXPECT_THROW(expectation(ScalarDist::cauchy(0, 1), 1.0, sq), NonIntegrable);
}

TEST(Dist, ExpectationIsLinear) {
  const ScalarDist d = parse_dist("mix(0.3*delta(1), 0.5*normal(-1, 2), 0.2*normal(0.5, 0.3))");
  const std::vector<std::function<double(double)>> pool = {
      [](double x) { return std::sin(x); }, [](double x) { return x * x; },
      [](double x) { return std::exp(-x * x); }, [](double x) { return std::abs(x); }};
  CounterRng rng(5, {1});
  for (int k = 0; k < 20; ++k) {
    const auto& f = pool[rng() % pool.size()];
    const auto& g = pool[rng() % pool.size()];
    const double a = 4 * rng.uniform_open() - 2;
    const double b = 4 * rng.uniform_open() - 2;
    const double c = 2 * rng.uniform_open();
    const double lhs = expectation(d, c, [&](double x) { return a * f(x) + b * g(x); });
    const double rhs = a * expectation(d, c, f) + b * expectation(d, c, g);
    EXPECT_NEAR(lhs, rhs, 2e-9);
  }
}

TEST(Dist, ExpectationOfIdentityIsMean) {
  const ScalarDist d = parse_dist("mix(0.3*delta(1.5), 0.7*normal(-2, 3))");
  EXPECT_NEAR(expectation(d, 0.7, [](double x) { return x; }), d.mean(), 1e-9);
}

TEST(Dist, SamplingAgreesWithQuadrature) {
  const ScalarDist d = parse_dist("mix(0.4*delta(0), 0.4*normal(1, 0.5), 0.2*cauchy(0, 2))");
  auto f = [](double x) { return std::cos(x) / (1 + x * x); };
  const double c = 0.8;
  const double quad = expectation(d, c, f);
  CounterRng rz(11, {1});
  CounterRng rg(11, {2});
  const int n = 1000000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = f(c * standard_normal(rg) + d.sample_one(rz));
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LE(std::abs(mean - quad), 4 * se);
}

TEST(Dist, BlockSignalSampling) {
  const BlockSignalDist b(3, 0.95, 1.0);
  CounterRng rng(3, {4});
  const auto v = b.sample(rng, 3 * 20000);
  std::size_t zero_blocks = 0;
  for (std::size_t k = 0; k < v.size(); k += 3) {
    const bool z = v[k] == 0.0;
    EXPECT_EQ(z, v[k + 1] == 0.0);
    EXPECT_EQ(z, v[k + 2] == 0.0);
    zero_blocks += z;
  }
  const double frac = zero_blocks / 20000.0;
  EXPECT_NEAR(frac, 0.95, 4 * std::sqrt(0.95 * 0.05 / 20000));
  EXPECT_THROW(b.sample(rng, 7), DomainError);
}

TEST(Dist, CounterStreamsAreReproducible) {
  CounterRng a(42, {1, 2});
  CounterRng b(42, {1, 2});
  CounterRng c(42, {2, 1});
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    differs |= x != c();
  }
  EXPECT_TRUE(differs);
}
