#include "spolab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace spolab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Role : std::uint64_t { kRoleDesign = 1, kRoleSignal = 2, kRoleNoise = 3 };

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// "name" or "name(arg)".
std::pair<std::string, std::optional<double>> split_call(const std::string& raw) {
  const std::string s = lower(trim(raw));
  const auto open = s.find('(');
  if (open == std::string::npos) return {s, std::nullopt};
  if (s.back() != ')') throw ConfigError("missing ')' in '" + raw + "'");
  const std::string arg = trim(s.substr(open + 1, s.size() - open - 2));
  double v = 0.0;
  const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), v);
  if (res.ec != std::errc() || res.ptr != arg.data() + arg.size()) {
    throw ConfigError("bad numeric argument '" + arg + "' in '" + raw + "'");
  }
  return {trim(s.substr(0, open)), v};
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_num(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("bad number '" + s + "'");
  return v;
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 2) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

double signal_second_moment(const SignalDist& s) {
  return std::visit([](const auto& d) { return d.second_moment(); }, s);
}

}  // namespace

InstanceLoss parse_loss_name(const std::string& name) {
  const auto [head, arg] = split_call(name);
  if (head == "square" && !arg) return LossSpec::square();
  if (head == "abs" && !arg) return LossSpec::abs();
  if (head == "huber") {
    if (!arg) throw ConfigError("huber needs its parameter, e.g. huber(1)");
    try {
      return LossSpec::huber(*arg);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  if (head == "sqrt_l2" && !arg) return NonSepLossSpec{};
  throw ConfigError("unknown loss '" + name + "' (square, abs, huber(rho), sqrt_l2)");
}

std::variant<RegSpec, ConeRegSpec> parse_reg_name(const std::string& name) {
  const auto [head, arg] = split_call(name);
  try {
    if (head == "l1" && !arg) return RegSpec::l1();
    if (head == "ridge" && !arg) return RegSpec::half_square();
    if (head == "zero" && !arg) return RegSpec::zero();
    if (head == "block_l2" && arg) {
      if (*arg != std::floor(*arg)) throw ConfigError("block length must be an integer");
      return RegSpec::block_l2(static_cast<int>(*arg));
    }
    if (head == "cone" && arg) return ConeRegSpec(*arg);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown regularizer '" + name + "' (l1, ridge, zero, block_l2(t), cone(Dbar))");
}

std::string loss_name(const InstanceLoss& loss) {
  return std::visit([](const auto& l) { return l.name(); }, loss);
}

void ModelSpec::validate() const {
  const InstanceLoss l = parse_loss_name(loss);
  const auto r = parse_reg_name(reg);
  const bool block_signal = std::holds_alternative<BlockSignalDist>(signal);
  if (const auto* spec = std::get_if<RegSpec>(&r)) {
    if (!spec->separable()) {
      if (!block_signal) throw ConfigError("block_l2 needs a block signal (block(t, zero_prob, variance))");
      if (std::get<BlockSignalDist>(signal).block_len != spec->block_len) {
        throw ConfigError("block signal length differs from the regularizer block length");
      }
    } else if (block_signal) {
      throw ConfigError("a block signal needs the block_l2 regularizer");
    }
    if (spec->kind != RegSpec::Kind::Zero && !block_signal && std::get<ScalarDist>(signal).has_cauchy()) {
      throw ConfigError("the signal may not have a Cauchy component");
    }
  }
  if (noise.has_cauchy()) {
    const auto* ls = std::get_if<LossSpec>(&l);
    if (!ls || (ls->kind != LossSpec::Kind::Abs && ls->kind != LossSpec::Kind::Huber)) {
      throw ConfigError("Cauchy noise needs the abs or huber loss");
    }
  }
}

EmeProvider loss_provider(const ModelSpec& m, double delta) {
  const InstanceLoss l = parse_loss_name(m.loss);
  if (std::holds_alternative<NonSepLossSpec>(l)) return EmeProvider::sqrt_lasso(m.noise.second_moment(), delta);
  const LossSpec ls = std::get<LossSpec>(l);
  if (ls.kind == LossSpec::Kind::Square && !m.noise.has_cauchy()) {
    return EmeProvider::quad_loss(m.noise.second_moment());
  }
  return EmeProvider::separable_loss(ls, m.noise);
}

EmeProvider reg_provider(const ModelSpec& m) {
  const auto r = parse_reg_name(m.reg);
  if (const auto* c = std::get_if<ConeRegSpec>(&r)) return EmeProvider::cone(c->stat_dim_ratio);
  const RegSpec spec = std::get<RegSpec>(r);
  switch (spec.kind) {
    case RegSpec::Kind::Zero:
      return EmeProvider::zero();
    case RegSpec::Kind::HalfSquare:
      return EmeProvider::quad_reg(signal_second_moment(m.signal));
    case RegSpec::Kind::L1:
      return EmeProvider::separable_reg(spec, std::get<ScalarDist>(m.signal));
    case RegSpec::Kind::BlockL2:
      if (spec.separable()) return EmeProvider::separable_reg(spec, std::get<ScalarDist>(m.signal));
      return EmeProvider::block(std::get<BlockSignalDist>(m.signal));
  }
  throw ConfigError("unsupported regularizer");
}

SpoSolution predict(const ModelSpec& m, double delta, double lambda) {
  m.validate();
  const InstanceLoss l = parse_loss_name(m.loss);
  const auto r = parse_reg_name(m.reg);
  if (const auto* c = std::get_if<ConeRegSpec>(&r)) {
    return solve_cone(delta, c->stat_dim_ratio, loss_provider(m, delta));
  }
  const bool no_reg = std::get<RegSpec>(r).kind == RegSpec::Kind::Zero || lambda == 0.0;
  if (std::holds_alternative<NonSepLossSpec>(l)) {
    if (no_reg) throw DomainError("the square-root LASSO prediction needs a regularizer and lambda > 0");
    return solve_sqrt_lasso(delta, m.noise.second_moment(), lambda, reg_provider(m));
  }
  const EmeProvider loss = loss_provider(m, delta);
  if (no_reg) {
    try {
      return solve_unregularized(delta, loss);
    } catch (const NoConvergence&) {
    } catch (const DegenerateSolution&) {
    }
    SpoSolution s = solve_minimax(SpoProblem{delta, 0.0, loss, EmeProvider::zero()});
    s.flags.push_back("minimax_fallback");
    return s;
  }
  const SpoProblem p{delta, lambda, loss, reg_provider(m)};
  try {
    return solve_fixed_point(p);
  } catch (const NoConvergence&) {
  } catch (const DegenerateSolution&) {
  }
  SpoSolution s = solve_minimax(p);
  s.flags.push_back("minimax_fallback");
  return s;
}

std::string ensemble_name(Ensemble e) { return e == Ensemble::Gaussian ? "gaussian" : "bernoulli"; }

Ensemble parse_ensemble(const std::string& s) {
  const std::string v = lower(trim(s));
  if (v == "gaussian") return Ensemble::Gaussian;
  if (v == "bernoulli") return Ensemble::Bernoulli;
  throw ConfigError("unknown ensemble '" + s + "' (gaussian, bernoulli)");
}

int ExperimentConfig::m() const { return static_cast<int>(std::lround(delta * n)); }

void ExperimentConfig::validate() const {
  model.validate();
  if (n < 8) throw ConfigError("n must be at least 8");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be positive");
  if (m() < 1) throw ConfigError("delta * n rounds to zero measurements");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (lambda_grid.empty()) throw ConfigError("lambda grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0) || !std::isfinite(lambda_grid[i])) throw ConfigError("lambda must be nonnegative");
    if (i > 0 && lambda_grid[i] < lambda_grid[i - 1]) throw ConfigError("lambda grid must be sorted");
  }
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (std::holds_alternative<ConeRegSpec>(parse_reg_name(model.reg))) {
    throw ConfigError("cone-constrained models can be predicted but not simulated");
  }
  if (const auto* b = std::get_if<BlockSignalDist>(&model.signal)) {
    if (n % b->block_len != 0) throw ConfigError("n must be a multiple of the block length");
  }
}

Instance gen_instance(const ExperimentConfig& cfg, std::uint64_t trial, double lambda) {
  const int n = cfg.n;
  const int m = cfg.m();
  Instance inst;
  InstanceProblem& p = inst.problem;
  p.loss = parse_loss_name(cfg.model.loss);
  p.reg = std::get<RegSpec>(parse_reg_name(cfg.model.reg));
  p.lambda = lambda;

  CounterRng ra(cfg.seed, {trial, kRoleDesign});
  p.A.resize(m, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  double* a = p.A.data();
  const std::size_t total = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
  if (cfg.ensemble == Ensemble::Gaussian) {
    for (std::size_t i = 0; i < total; ++i) a[i] = s * standard_normal(ra);
  } else {
    for (std::size_t i = 0; i < total; ++i) a[i] = (ra() >> 63) ? s : -s;
  }

  CounterRng rx(cfg.seed, {trial, kRoleSignal});
  const std::vector<double> x0 =
      std::visit([&](const auto& d) { return d.sample(rx, static_cast<std::size_t>(n)); }, cfg.model.signal);
  inst.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), n);

  CounterRng rz(cfg.seed, {trial, kRoleNoise});
  const std::vector<double> z = cfg.model.noise.sample(rz, static_cast<std::size_t>(m));
  p.y = p.A * inst.x0 + Eigen::Map<const Eigen::VectorXd>(z.data(), m);
  return inst;
}

bool ResultRow::failed() const {
  if (std::isnan(predicted_alpha_sq) || std::isnan(empirical_mean)) return true;
  for (const auto& f : flags) {
    if (f.rfind("estimator_", 0) == 0 || f.rfind("prediction_failed", 0) == 0) return true;
  }
  return false;
}

bool ExperimentResult::any_failed() const {
  return std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.failed(); });
}

int thread_count() {
  if (const char* env = std::getenv("SPOLAB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::pair<double, double> mean_std(std::vector<double> v) {
  if (v.empty()) return {kNaN, kNaN};
  std::sort(v.begin(), v.end());
  const double k = static_cast<double>(v.size());
  const double mean = pairwise_sum(v.data(), v.size()) / k;
  if (v.size() == 1) return {mean, 0.0};
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  std::sort(sq.begin(), sq.end());
  return {mean, std::sqrt(pairwise_sum(sq.data(), sq.size()) / (k - 1.0))};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t L = cfg.lambda_grid.size();
  const std::size_t T = static_cast<std::size_t>(cfg.trials);

  ExperimentResult out;
  out.rows.resize(L);
  for (std::size_t i = 0; i < L; ++i) {
    ResultRow& row = out.rows[i];
    row.lambda = cfg.lambda_grid[i];
    row.delta = cfg.delta;
    row.n = cfg.n;
    row.trials = cfg.trials;
    row.loss = cfg.model.loss;
    row.reg = cfg.model.reg;
    try {
      const SpoSolution s = predict(cfg.model, cfg.delta, row.lambda);
      row.predicted_alpha_sq = s.alpha_sq();
      row.solver_method = s.method;
      row.flags = s.flags;
    } catch (const std::exception& e) {
      row.predicted_alpha_sq = kNaN;
      row.solver_method = "none";
      row.flags.push_back(std::string("prediction_failed: ") + e.what());
    }
  }

  struct TrialOutcome {
    double error = kNaN;
    std::string flag;
  };
  std::vector<TrialOutcome> outcomes(L * T);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t job = next++; job < L * T; job = next++) {
      const std::size_t li = job / T;
      const std::size_t ti = job % T;
      TrialOutcome& o = outcomes[job];
      try {
        const Instance inst = gen_instance(cfg, ti, cfg.lambda_grid[li]);
        try {
          const SolveReport r = solve_instance(inst.problem, cfg.tol, cfg.max_iter);
          o.error = (r.x - inst.x0).squaredNorm() / cfg.n;
        } catch (const MaxIterExceeded& e) {
          o.error = (e.report.x - inst.x0).squaredNorm() / cfg.n;
          o.flag = "estimator_max_iter";
        }
      } catch (const std::exception& e) {
        o.flag = std::string("estimator_failed: ") + e.what();
      }
    }
  };
  const int threads = std::min<int>(thread_count(), static_cast<int>(L * T));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t li = 0; li < L; ++li) {
    ResultRow& row = out.rows[li];
    std::vector<double> errs;
    for (std::size_t ti = 0; ti < T; ++ti) {
      const TrialOutcome& o = outcomes[li * T + ti];
      if (!std::isnan(o.error)) errs.push_back(o.error);
      if (!o.flag.empty() && std::find(row.flags.begin(), row.flags.end(), o.flag) == row.flags.end()) {
        row.flags.push_back(o.flag);
      }
    }
    row.trial_errors = errs;
    const auto [mean, sd] = mean_std(errs);
    row.empirical_mean = mean;
    row.empirical_std = sd;
  }
  return out;
}

ExperimentResult sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  ExperimentResult out;
  if (axis == SweepAxis::Lambda) {
    ExperimentConfig c = cfg;
    c.lambda_grid = values;
    return run_experiment(c);
  }
  for (double d : values) {
    ExperimentConfig c = cfg;
    c.delta = d;
    ExperimentResult r = run_experiment(c);
    out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
  }
  return out;
}

namespace {

const char* const kColumns[] = {"lambda",         "delta",         "n",     "trials", "predicted_alpha_sq",
                                "empirical_mean", "empirical_std", "solver_method", "flags", "loss", "reg"};

std::string join_flags(const std::vector<std::string>& flags) {
  std::string s;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (i) s += ';';
    for (char c : flags[i]) s += (c == ',' || c == ';' || c == '\n') ? ' ' : c;
  }
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

nlohmann::ordered_json num_json(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double json_num(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

}  // namespace

std::string to_csv(const ExperimentResult& r) {
  std::string out;
  for (std::size_t i = 0; i < std::size(kColumns); ++i) {
    if (i) out += ',';
    out += kColumns[i];
  }
  out += '\n';
  for (const auto& row : r.rows) {
    out += fmt(row.lambda) + ',' + fmt(row.delta) + ',' + std::to_string(row.n) + ',' + std::to_string(row.trials) +
           ',' + fmt(row.predicted_alpha_sq) + ',' + fmt(row.empirical_mean) + ',' + fmt(row.empirical_std) + ',' +
           row.solver_method + ',' + join_flags(row.flags) + ',' + row.loss + ',' + row.reg + '\n';
  }
  return out;
}

std::string to_json(const ExperimentResult& r) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json j;
    j["lambda"] = row.lambda;
    j["delta"] = row.delta;
    j["n"] = row.n;
    j["trials"] = row.trials;
    j["predicted_alpha_sq"] = num_json(row.predicted_alpha_sq);
    j["empirical_mean"] = num_json(row.empirical_mean);
    j["empirical_std"] = num_json(row.empirical_std);
    j["solver_method"] = row.solver_method;
    j["flags"] = row.flags;
    j["loss"] = row.loss;
    j["reg"] = row.reg;
    rows.push_back(std::move(j));
  }
  return rows.dump(2) + "\n";
}

ExperimentResult from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ExperimentResult r;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != std::size(kColumns)) throw ConfigError("CSV row has the wrong number of fields");
    ResultRow row;
    row.lambda = parse_num(f[0]);
    row.delta = parse_num(f[1]);
    row.n = std::stoi(f[2]);
    row.trials = std::stoi(f[3]);
    row.predicted_alpha_sq = parse_num(f[4]);
    row.empirical_mean = parse_num(f[5]);
    row.empirical_std = parse_num(f[6]);
    row.solver_method = f[7];
    if (!f[8].empty()) row.flags = split(f[8], ';');
    row.loss = f[9];
    row.reg = f[10];
    r.rows.push_back(std::move(row));
  }
  return r;
}

ExperimentResult from_json(const std::string& text) {
  ExperimentResult r;
  const auto j = nlohmann::json::parse(text);
  for (const auto& e : j) {
    ResultRow row;
    row.lambda = e.at("lambda").get<double>();
    row.delta = e.at("delta").get<double>();
    row.n = e.at("n").get<int>();
    row.trials = e.at("trials").get<int>();
    row.predicted_alpha_sq = json_num(e.at("predicted_alpha_sq"));
    row.empirical_mean = json_num(e.at("empirical_mean"));
    row.empirical_std = json_num(e.at("empirical_std"));
    row.solver_method = e.at("solver_method").get<std::string>();
    row.flags = e.at("flags").get<std::vector<std::string>>();
    row.loss = e.at("loss").get<std::string>();
    row.reg = e.at("reg").get<std::string>();
    r.rows.push_back(std::move(row));
  }
  return r;
}

}  // namespace spolab
