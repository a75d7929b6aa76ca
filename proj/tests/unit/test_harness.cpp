#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "spolab/harness.hpp"

using namespace spolab;

namespace {

ExperimentConfig small_ridge() {
  ExperimentConfig c;
  c.model.loss = "square";
  c.model.reg = "ridge";
  c.n = 64;
  c.delta = 2.0;
  c.lambda_grid = {0.5, 1.0, 2.0};
  c.trials = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Harness, GaussianEnsembleMoments) {
  ExperimentConfig c = small_ridge();
  c.n = 512;
  const Instance inst = gen_instance(c, 0, 1.0);
  const Eigen::MatrixXd& A = inst.problem.A;
  ASSERT_EQ(A.rows(), 1024);
  ASSERT_EQ(A.cols(), 512);
  const double count = static_cast<double>(A.size());
  const double mean = A.mean();
  const double var = (A.array() - mean).square().sum() / (count - 1);
  EXPECT_LE(std::abs(mean), 4.0 / std::sqrt(count));
  EXPECT_NEAR(var * 512, 1.0, 0.05);
}

TEST(Harness, BernoulliSupport) {
  ExperimentConfig c = small_ridge();
  c.ensemble = Ensemble::Bernoulli;
  const Instance inst = gen_instance(c, 1, 1.0);
  const double s = 1.0 / std::sqrt(64.0);
  EXPECT_TRUE((inst.problem.A.array().abs() == s).all());
  const double frac_pos = (inst.problem.A.array() > 0).cast<double>().mean();
  EXPECT_NEAR(frac_pos, 0.5, 0.05);
}

TEST(Harness, InstancesAreKeyedBySeedAndTrial) {
  const ExperimentConfig c = small_ridge();
  const Instance a = gen_instance(c, 3, 1.0), b = gen_instance(c, 3, 2.0), d = gen_instance(c, 4, 1.0);
  EXPECT_TRUE(a.problem.A == b.problem.A);
  EXPECT_TRUE(a.problem.y == b.problem.y);
  EXPECT_TRUE(a.x0 == b.x0);
  EXPECT_FALSE(a.problem.A == d.problem.A);
  EXPECT_TRUE((a.problem.y - a.problem.A * a.x0).norm() > 0);
}

TEST(Harness, NoiseAndSignalLaws) {
  ExperimentConfig c = small_ridge();
  c.n = 2000;
  c.delta = 1.0;
  c.model.loss = "abs";
  c.model.reg = "l1";
  c.model.noise = parse_dist("mix(0.7*delta(0), 0.3*normal(0,1))");
  c.model.signal = parse_dist("mix(0.9*delta(0), 0.1*normal(0,10))");
  const Instance inst = gen_instance(c, 0, 1.0);
  const Eigen::VectorXd z = inst.problem.y - inst.problem.A * inst.x0;
  const double zero_noise = (z.array().abs() < 1e-12).cast<double>().mean();
  const double zero_signal = (inst.x0.array() == 0.0).cast<double>().mean();
  EXPECT_NEAR(zero_noise, 0.7, 4 * std::sqrt(0.21 / 2000));
  EXPECT_NEAR(zero_signal, 0.9, 4 * std::sqrt(0.09 / 2000));
}

TEST(Harness, RunIsDeterministic) {
  const ExperimentConfig c = small_ridge();
  const std::string a = to_csv(run_experiment(c));
  const std::string b = to_csv(run_experiment(c));
  EXPECT_EQ(a, b);
  ExperimentConfig d = c;
  d.seed = 6;
  EXPECT_NE(a, to_csv(run_experiment(d)));
}

TEST(Harness, LambdaSweepEmitsOneRowPerValue) {
  ExperimentConfig c = small_ridge();
  c.trials = 1;
  const std::vector<double> grid = {0.1, 0.3, 1.0, 3.0};
  const ExperimentResult r = sweep(c, SweepAxis::Lambda, grid);
  ASSERT_EQ(r.rows.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(r.rows[i].lambda, grid[i]);
    EXPECT_EQ(r.rows[i].trials, 1);
    EXPECT_GE(r.rows[i].empirical_std, 0.0);
  }
}

TEST(Harness, DeltaSweepLeastSquares) {
  ExperimentConfig c;
  c.model.loss = "square";
  c.model.reg = "zero";
  c.n = 64;
  c.lambda_grid = {0.0};
  c.trials = 1;
  const ExperimentResult r = sweep(c, SweepAxis::Delta, {1.5, 2.0, 3.0});
  ASSERT_EQ(r.rows.size(), 3u);
  for (const ResultRow& row : r.rows) EXPECT_NEAR(row.predicted_alpha_sq, 1.0 / (row.delta - 1.0), 1e-8);
}

TEST(Harness, PredictionMatchesClosedForm) {
  ModelSpec m;
  m.loss = "square";
  m.reg = "ridge";
  EXPECT_NEAR(predict(m, 2.0, 1.0).alpha_sq(), closed_ridge_ls(2, 1, 1, 1), 1e-6);
}

TEST(Harness, FailuresAreFlaggedNotThrown) {
  ExperimentConfig c = small_ridge();
  c.model.loss = "abs";
  c.model.reg = "l1";
  c.tol = 1e-14;
  c.max_iter = 20;
  c.trials = 1;
  const ExperimentResult r = run_experiment(c);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_TRUE(r.any_failed());
  for (const ResultRow& row : r.rows) {
    EXPECT_NE(std::find(row.flags.begin(), row.flags.end(), "estimator_max_iter"), row.flags.end());
  }
}

TEST(Harness, UnstablePredictionIsFlagged) {
  ExperimentConfig c;
  c.model.loss = "square";
  c.model.reg = "zero";
  c.n = 32;
  c.delta = 0.8;
  c.lambda_grid = {0.0};
  c.trials = 1;
  const ExperimentResult r = run_experiment(c);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(std::isnan(r.rows[0].predicted_alpha_sq));
  EXPECT_TRUE(r.rows[0].failed());
}

TEST(Harness, MeanStdIsOrderIndependent) {
  std::vector<double> v = {0.1, 1e8, -3.0, 0.3, 1e-9, 7.0, 2.5};
  const auto a = mean_std(v);
  std::reverse(v.begin(), v.end());
  const auto b = mean_std(v);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  const auto c = mean_std({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(c.first, 2.0);
  EXPECT_DOUBLE_EQ(c.second, 1.0);
}

TEST(Harness, CsvAndJsonRoundTrip) {
  ExperimentConfig c = small_ridge();
  c.trials = 1;
  ExperimentResult r = run_experiment(c);
  r.rows[1].flags = {"minimax_fallback", "flat_minimum"};
  r.rows[2].predicted_alpha_sq = std::nan("");
  const std::string csv = to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "lambda,delta,n,trials,predicted_alpha_sq,empirical_mean,empirical_std,solver_method,flags,loss,reg");
  const ExperimentResult back = from_csv(csv);
  EXPECT_EQ(to_csv(back), csv);
  ASSERT_EQ(back.rows.size(), 3u);
  EXPECT_EQ(back.rows[1].flags, r.rows[1].flags);
  EXPECT_TRUE(std::isnan(back.rows[2].predicted_alpha_sq));
  const std::string json = to_json(r);
  EXPECT_EQ(to_json(from_json(json)), json);
  EXPECT_EQ(to_csv(from_json(json)), csv);
}

TEST(Harness, ConfigValidation) {
  ExperimentConfig c = small_ridge();
  c.n = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_ridge();
  c.lambda_grid = {2.0, 1.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_ridge();
  c.model.reg = "cone(0.3)";
  EXPECT_THROW(c.validate(), ConfigError);
  ModelSpec m;
  m.loss = "square";
  m.noise = ScalarDist::cauchy(0, 1);
  EXPECT_THROW(m.validate(), ConfigError);
  m.loss = "nonsense";
  EXPECT_THROW(m.validate(), ConfigError);
}
