#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "spolab/config.hpp"

using namespace spolab;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

// stdout and exit status of the CLI; stderr is folded in when merge is set.
CliRun cli(const std::string& args, bool merge = false) {
  const std::string cmd = std::string(SPOLAB_CLI) + " " + args + (merge ? " 2>&1" : " 2>/dev/null");
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("spolab_test_" + name);
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST(Config, SyntaxErrorReportsPosition) {
  RunConfig c;
  try {
    apply_config_text(c, "{\n  \"problem\": {\"delta\": 2,,}\n}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos) << e.what();
  }
}

TEST(Config, UnknownKeysRejected) {
  RunConfig c;
  EXPECT_THROW(apply_config_text(c, R"({"problem": {"dleta": 2}})"), ConfigError);
  EXPECT_THROW(apply_config_text(c, R"({"solver": {}})"), ConfigError);
  try {
    apply_config_text(c, "{\n\n  \"model\": {\"lsos\": \"abs\"}}");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, AppliesSections) {
  RunConfig c;
  const auto keys = apply_config_text(c, R"js({
    "model": {"loss": "abs", "reg": "l1", "noise": "mix(0.7*delta(0), 0.3*normal(0,1))",
              "signal": "mix(0.9*delta(0), 0.1*normal(0,10))"},
    "problem": {"delta": 1.2, "lambda": 0.5},
    "experiment": {"n": 128, "lambda_grid": [0.1, 1], "ensemble": "bernoulli", "trials": 3, "seed": 9},
    "output": {"format": "json"}})js");
  EXPECT_EQ(c.model.loss, "abs");
  EXPECT_EQ(c.delta, 1.2);
  EXPECT_EQ(c.n, 128);
  EXPECT_EQ(c.ensemble, Ensemble::Bernoulli);
  EXPECT_EQ(c.lambda_grid, (std::vector<double>{0.1, 1.0}));
  EXPECT_EQ(c.format, "json");
  EXPECT_TRUE(keys.count("experiment.seed"));
  EXPECT_NO_THROW(c.experiment().validate());
}

TEST(Config, BlockSignalRoundTrip) {
  const SignalDist s = parse_signal("block(3, 0.95, 1)");
  ASSERT_TRUE(std::holds_alternative<BlockSignalDist>(s));
  EXPECT_EQ(std::get<BlockSignalDist>(s).block_len, 3);
  const SignalDist back = parse_signal(signal_to_string(s));
  EXPECT_EQ(std::get<BlockSignalDist>(back).zero_prob, 0.95);
  EXPECT_THROW(parse_signal("block(3, 1.5, 1)"), Error);
}

TEST(Config, PresetsAreValid) {
  for (const auto& name : preset_names()) {
    const RunConfig c = preset(name);
    EXPECT_NO_THROW(c.model.validate()) << name;
    EXPECT_EQ(config_hash(c).size(), 16u);
  }
  EXPECT_THROW(preset("nope"), ConfigError);
}

TEST(Config, HashTracksContent) {
  RunConfig a = preset("lad-l1");
  RunConfig b = preset("lad-l1");
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.output_path = "elsewhere.csv";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed += 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Cli, PredictLeastSquares) {
  const CliRun r = cli("predict --loss square --noise \"normal(0,1)\" --delta 2 --no-reg");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["solution"]["alpha_sq"].get<double>(), 1.0, 1e-8);
}

TEST(Cli, PredictRidgePreset) {
  const CliRun r = cli("predict --preset ridge-ls --delta 2 --lambda 1 --sigma2 1 --sigmax2 1");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(nlohmann::json::parse(r.out)["solution"]["kappa"].get<double>(), 0.414214, 1e-6);
}

TEST(Cli, PredictFailureExitsTwo) {
  const CliRun r = cli("predict --loss square --noise \"normal(0,1)\" --delta 0.9 --no-reg");
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(nlohmann::json::parse(r.out).contains("error"));
}

TEST(Cli, MalformedConfigExitsOne) {
  const std::string path = write_temp("bad.json", "{\n  \"problem\": {\n    \"delta\": 2\n    \"lambda\": 1\n  }\n}\n");
  const CliRun r = cli("predict --config " + path, true);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("line 4"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("column"), std::string::npos) << r.out;
  EXPECT_EQ(cli("predict --loss hubbub --delta 2").code, 1);
  EXPECT_EQ(cli("predict --bogus-flag").code, 1);
}

TEST(Cli, ConfigFileOverridesFlagsWithWarning) {
  const std::string path = write_temp("delta.json", R"({"problem": {"delta": 3}})");
  const CliRun r = cli("predict --loss square --no-reg --delta 2 --config " + path, true);
  EXPECT_NE(r.out.find("warning"), std::string::npos);
  const auto j = nlohmann::json::parse(r.out.substr(r.out.find('{')));
  EXPECT_NEAR(j["solution"]["alpha_sq"].get<double>(), 0.5, 1e-8);
}

TEST(Cli, CheckReports) {
  CliRun r = cli("check --delta 0.9");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("UNSTABLE"), std::string::npos);
  r = cli("check --delta 1.0 --dbar 0.5");
  EXPECT_NE(r.out.find("cone regime (delta > dbar): STABLE, margin 0.5"), std::string::npos) << r.out;
  r = cli("check --delta 1.2 --dbar 0.35 --sbar 0.7");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("perfect recovery:"), std::string::npos);
  EXPECT_NE(r.out.find("kappa*"), std::string::npos);
  r = cli("check --delta 1.2 --dbar 0.35 --p0 0.7");
  EXPECT_NE(r.out.find("HOLDS"), std::string::npos) << r.out;
  EXPECT_EQ(cli("check --delta 1.2 --dbar 1.5").code, 1);
}

TEST(Cli, SimulateSmallRidgeIsFastAndReproducible) {
  const auto t0 = std::chrono::steady_clock::now();
  const CliRun a = cli("simulate --preset ridge-ls --trials 1 --n 64");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_LT(secs, 10.0);
  EXPECT_EQ(a.out.rfind("# config-hash: ", 0), 0u);
  EXPECT_EQ(a.out, cli("simulate --preset ridge-ls --trials 1 --n 64").out);
}

TEST(Cli, SweepWithTwoLosses) {
  const CliRun r = cli("sweep --preset lad-l1-fig2 --loss abs,square --axis lambda --values 0.3,1,3 --n 64 --trials 1");
  ASSERT_EQ(r.code, 0) << r.out;
  int abs_rows = 0, square_rows = 0;
  std::stringstream ss(r.out);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("lambda,", 0) == 0) continue;
    abs_rows += line.find(",abs,") != std::string::npos;
    square_rows += line.find(",square,") != std::string::npos;
  }
  EXPECT_EQ(abs_rows, 3);
  EXPECT_EQ(square_rows, 3);
}

TEST(Cli, JsonOutputParses) {
  const CliRun r = cli("simulate --preset ridge-ls --trials 1 --n 32 --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["rows"].size(), 1u);
  EXPECT_TRUE(j.contains("config_hash"));
}

TEST(Cli, DryRunDoesNotSolve) {
  const CliRun r = cli("simulate --preset lad-l1 --dry-run");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("plan:", 0), 0u);
}
