#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spolab/config.hpp"

using namespace spolab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCompute = 2;

// Options shared by predict, simulate and sweep. Each is bound to the dotted
// config key it sets, so conflicts with a config file can be reported.
struct Flags {
  std::string config_path;
  std::string preset;
  std::string loss, reg, noise, signal, ensemble, format, output, axis;
  double delta = 0, lambda = 0, sigma2 = 0, sigmax2 = 0, tol = 0;
  int n = 0, trials = 0;
  std::uint64_t seed = 0;
  bool no_reg = false;
  bool dry_run = false;
  std::vector<double> lambda_grid, values;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* app, bool experiment) {
    app->add_option("--config", config_path, "JSON run configuration");
    app->add_option("--preset", preset, "built-in setting")->check(CLI::IsMember(preset_names()));
    opts["model.loss"] = app->add_option("--loss", loss, "square, abs, huber(rho), sqrt_l2");
    opts["model.reg"] = app->add_option("--reg", reg, "l1, ridge, zero, block_l2(t), cone(Dbar)");
    opts["model.noise"] = app->add_option("--noise", noise, "noise law, e.g. \"normal(0,1)\"");
    opts["model.signal"] = app->add_option("--signal", signal, "signal law or block(t, zero_prob, variance)");
    opts["sigma2"] = app->add_option("--sigma2", sigma2, "shorthand for --noise normal(0,sigma2)");
    opts["sigmax2"] = app->add_option("--sigmax2", sigmax2, "shorthand for --signal normal(0,sigmax2)");
    opts["no-reg"] = app->add_flag("--no-reg", no_reg, "no regularizer");
    opts["problem.delta"] = app->add_option("--delta", delta, "measurements per unknown");
    opts["problem.lambda"] = app->add_option("--lambda", lambda, "regularization weight");
    opts["experiment.seed"] = app->add_option("--seed", seed, "random seed");
    opts["output.format"] = app->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    opts["output.path"] = app->add_option("-o,--output", output, "output file (default stdout)");
    if (!experiment) return;
    opts["experiment.n"] = app->add_option("--n", n, "signal dimension");
    opts["experiment.trials"] = app->add_option("--trials", trials, "independent realizations");
    opts["experiment.ensemble"] = app->add_option("--ensemble", ensemble, "gaussian or bernoulli");
    opts["experiment.tol"] = app->add_option("--tol", tol, "estimator KKT tolerance");
    opts["experiment.lambda_grid"] = app->add_option("--lambda-grid", lambda_grid, "lambda values")->delimiter(',');
    app->add_flag("--dry-run", dry_run, "validate and print the resolved plan");
  }

  bool given(const std::string& key) const {
    const auto it = opts.find(key);
    return it != opts.end() && it->second->count() > 0;
  }

  // Preset, then flags, then the config file (which wins, with a warning).
  RunConfig resolve(const std::string& loss_override = "") const {
    RunConfig c = preset.empty() ? RunConfig{} : spolab::preset(preset);
    std::set<std::string> from_flags;
    auto mark = [&](const std::string& k) { from_flags.insert(k); };
    const std::string l = loss_override.empty() ? loss : loss_override;
    if (given("model.loss")) {
      parse_loss_name(l);
      c.model.loss = l;
      mark("model.loss");
    }
    if (given("model.reg")) {
      parse_reg_name(reg);
      c.model.reg = reg;
      mark("model.reg");
    }
    if (given("no-reg")) {
      c.model.reg = "zero";
      c.lambda = 0.0;
      c.lambda_grid = {0.0};
      mark("model.reg");
    }
    if (given("model.noise")) {
      c.model.noise = parse_dist(noise);
      mark("model.noise");
    }
    if (given("sigma2")) {
      c.model.noise = sigma2 == 0.0 ? ScalarDist::point(0.0) : ScalarDist::normal(0.0, sigma2);
      mark("model.noise");
    }
    if (given("model.signal")) {
      c.model.signal = parse_signal(signal);
      mark("model.signal");
    }
    if (given("sigmax2")) {
      c.model.signal = sigmax2 == 0.0 ? ScalarDist::point(0.0) : ScalarDist::normal(0.0, sigmax2);
      mark("model.signal");
    }
    if (given("problem.delta")) c.delta = delta, mark("problem.delta");
    if (given("problem.lambda")) {
      c.lambda = lambda;
      if (!given("experiment.lambda_grid")) c.lambda_grid = {lambda};
      mark("problem.lambda");
    }
    if (given("experiment.seed")) c.seed = seed, mark("experiment.seed");
    if (given("output.format")) c.format = format, mark("output.format");
    if (given("output.path")) c.output_path = output, mark("output.path");
    if (given("experiment.n")) c.n = n, mark("experiment.n");
    if (given("experiment.trials")) c.trials = trials, mark("experiment.trials");
    if (given("experiment.ensemble")) c.ensemble = parse_ensemble(ensemble), mark("experiment.ensemble");
    if (given("experiment.tol")) c.tol = tol, mark("experiment.tol");
    if (given("experiment.lambda_grid")) c.lambda_grid = lambda_grid, mark("experiment.lambda_grid");
    if (!config_path.empty()) {
      for (const auto& k : apply_config_file(c, config_path)) {
        if (from_flags.count(k)) std::cerr << "warning: " << k << " from " << config_path << " overrides the flag\n";
      }
    }
    return c;
  }
};

std::string header_csv(const RunConfig& c) {
  std::string h = "# config-hash: " + config_hash(c) + "\n# seed: " + std::to_string(c.seed) + "\n";
  for (const auto& note : c.notes) h += "# note: " + note + "\n";
  return h;
}

void emit(const RunConfig& c, const std::string& text) {
  if (c.output_path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(c.output_path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + c.output_path + "'");
  out << text;
}

std::string render_rows(const RunConfig& c, const ExperimentResult& r) {
  if (c.format == "json") {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash(c);
    j["seed"] = c.seed;
    j["notes"] = c.notes;
    j["rows"] = nlohmann::ordered_json::parse(to_json(r));
    return j.dump(2) + "\n";
  }
  return header_csv(c) + to_csv(r);
}

int cmd_predict(const Flags& f) {
  RunConfig c = f.resolve();
  if (!f.given("output.format") && !c.assigned.count("output.format")) c.format = "json";
  c.model.validate();
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash(c);
  j["model"] = {{"loss", c.model.loss},
                {"reg", c.model.reg},
                {"noise", c.model.noise.to_string()},
                {"signal", signal_to_string(c.model.signal)},
                {"delta", c.delta},
                {"lambda", c.lambda}};
  int code = kExitOk;
  try {
    const SpoSolution s = predict(c.model, c.delta, c.lambda);
    j["solution"] = nlohmann::ordered_json::parse(s.to_json());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    j["error"] = e.what();
    code = kExitCompute;
  }
  if (c.format == "csv") {
    std::string out = "# config-hash: " + config_hash(c) + "\n";
    out += "alpha,alpha_sq,beta,nu,kappa,tau_g,tau_h,cost,method,iterations,residual,flags,error\n";
    if (j.contains("solution")) {
      const auto& s = j["solution"];
      std::string flags;
      for (const auto& fl : s["flags"]) flags += (flags.empty() ? "" : ";") + fl.get<std::string>();
      for (const char* k : {"alpha", "alpha_sq", "beta", "nu", "kappa", "tau_g", "tau_h", "cost"}) {
        out += s[k].dump() + ",";
      }
      out += s["method"].get<std::string>() + "," + s["iterations"].dump() + "," + s["residual"].dump() + "," +
             flags + ",\n";
    } else {
      std::string err = j["error"].get<std::string>();
      for (auto& ch : err) ch = ch == ',' ? ' ' : ch;
      out += ",,,,,,,,,,,," + err + "\n";
    }
    emit(c, out);
  } else {
    emit(c, j.dump(2) + "\n");
  }
  return code;
}

int cmd_simulate(const Flags& f) {
  const RunConfig c = f.resolve();
  const ExperimentConfig e = c.experiment();
  e.validate();
  if (f.dry_run) {
    std::cout << "plan: " << e.lambda_grid.size() << " lambda values x " << e.trials << " trials, n = " << e.n
              << ", m = " << e.m() << ", threads = " << thread_count() << "\n"
              << nlohmann::json::parse(canonical_json(c)).dump(2) << "\n";
    return kExitOk;
  }
  const ExperimentResult r = run_experiment(e);
  emit(c, render_rows(c, r));
  return r.any_failed() ? kExitCompute : kExitOk;
}

int cmd_sweep(const Flags& f) {
  std::vector<std::string> losses;
  if (f.given("model.loss")) {
    std::stringstream ss(f.loss);
    std::string item;
    while (std::getline(ss, item, ',')) losses.push_back(item);
  }
  if (losses.empty()) losses.push_back("");
  ExperimentResult all;
  RunConfig first;
  std::vector<std::pair<RunConfig, ExperimentConfig>> plans;
  for (const auto& l : losses) {
    RunConfig c = f.resolve(l);
    if (!f.axis.empty()) c.axis = f.axis == "delta" ? SweepAxis::Delta : SweepAxis::Lambda;
    if (!f.values.empty()) c.sweep_values = f.values;
    if (c.sweep_values.empty()) c.sweep_values = c.axis == SweepAxis::Lambda ? c.lambda_grid : std::vector<double>{c.delta};
    ExperimentConfig e = c.experiment();
    if (c.axis == SweepAxis::Lambda) e.lambda_grid = c.sweep_values;
    for (double d : c.axis == SweepAxis::Delta ? c.sweep_values : std::vector<double>{c.delta}) {
      ExperimentConfig probe = e;
      probe.delta = d;
      probe.validate();
    }
    plans.emplace_back(c, e);
  }
  // The header hash covers the first variant; the loss column tells the rows apart.
  first = plans.front().first;
  if (f.dry_run) {
    for (const auto& [c, e] : plans) {
      std::cout << "plan: loss " << c.model.loss << ", axis " << (c.axis == SweepAxis::Lambda ? "lambda" : "delta")
                << ", " << c.sweep_values.size() << " values x " << e.trials << " trials\n";
    }
    std::cout << nlohmann::json::parse(canonical_json(first)).dump(2) << "\n";
    return kExitOk;
  }
  for (const auto& [c, e] : plans) {
    const ExperimentResult r = sweep(e, c.axis, c.sweep_values);
    all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
  }
  emit(first, render_rows(first, all));
  return all.any_failed() ? kExitCompute : kExitOk;
}

struct CheckFlags {
  double delta = 0, dbar = 0, sbar = 0, p0 = 0;
  CLI::Option *o_dbar = nullptr, *o_sbar = nullptr, *o_p0 = nullptr;
};

int cmd_check(const CheckFlags& f) {
  if (!(f.delta > 0.0)) throw ConfigError("--delta must be positive");
  const bool has_dbar = f.o_dbar->count() > 0;
  if (has_dbar && !(f.dbar > 0.0 && f.dbar < 1.0)) throw ConfigError("--dbar must lie in (0, 1)");
  std::printf("unregularized regime (delta > 1): %s, margin %.6g\n", f.delta > 1.0 ? "STABLE" : "UNSTABLE",
              f.delta - 1.0);
  if (has_dbar) {
    std::printf("cone regime (delta > dbar): %s, margin %.6g\n", f.delta > f.dbar ? "STABLE" : "UNSTABLE",
                f.delta - f.dbar);
  }
  const bool has_sbar = f.o_sbar->count() > 0;
  const bool has_p0 = f.o_p0->count() > 0;
  if (has_sbar || has_p0) {
    if (!has_dbar) throw ConfigError("the perfect-recovery check needs --dbar");
    RecoveryCheck r;
    try {
      r = has_sbar ? perfect_recovery_check(f.delta, f.dbar, f.sbar)
                   : perfect_recovery_check_noise(f.delta, f.dbar, f.p0);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    std::printf("perfect recovery: %s, kappa* %.6g, margin %.6g\n", r.holds ? "HOLDS" : "FAILS", r.kappa, r.margin);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotic squared error of regularized M-estimators, with Monte Carlo checks"};
  app.require_subcommand(1);
  Flags pf, sf, wf;
  CheckFlags cf;
  auto* predict_cmd = app.add_subcommand("predict", "solve the scalar problem and print the solution");
  pf.add(predict_cmd, false);
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo run over the lambda grid");
  sf.add(simulate_cmd, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep along lambda or delta");
  wf.add(sweep_cmd, true);
  sweep_cmd->add_option("--axis", wf.axis, "lambda or delta")->check(CLI::IsMember({"lambda", "delta"}));
  sweep_cmd->add_option("--values", wf.values, "axis values")->delimiter(',');
  auto* check_cmd = app.add_subcommand("check", "stability and perfect-recovery conditions");
  check_cmd->add_option("--delta", cf.delta, "measurements per unknown")->required();
  cf.o_dbar = check_cmd->add_option("--dbar", cf.dbar, "statistical dimension ratio");
  cf.o_sbar = check_cmd->add_option("--sbar", cf.sbar, "delta times the nonzero-noise fraction");
  cf.o_p0 = check_cmd->add_option("--p0", cf.p0, "probability that a noise entry is exactly zero");
  std::uint64_t check_seed = 0;
  check_cmd->add_option("--seed", check_seed, "accepted for uniformity; the check is deterministic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    if (*predict_cmd) return cmd_predict(pf);
    if (*simulate_cmd) return cmd_simulate(sf);
    if (*sweep_cmd) return cmd_sweep(wf);
    return cmd_check(cf);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompute;
  }
}
