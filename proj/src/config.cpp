#include "spolab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace spolab {

namespace {

using nlohmann::json;

struct Position {
  std::size_t line = 1;
  std::size_t column = 1;
};

Position position_at(const std::string& text, std::size_t offset) {
  Position p;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++p.line;
      p.column = 1;
    } else {
      ++p.column;
    }
  }
  return p;
}

// nlohmann does not keep source positions, so a key is located by searching
// for its quoted name after the enclosing section's name.
Position locate_key(const std::string& text, const std::string& section, const std::string& key) {
  std::size_t from = 0;
  if (!section.empty()) {
    const auto s = text.find('"' + section + '"');
    if (s != std::string::npos) from = s + section.size() + 2;
  }
  const auto k = text.find('"' + key + '"', from);
  return position_at(text, k == std::string::npos ? 0 : k);
}

[[noreturn]] void fail_at(const std::string& text, const std::string& section, const std::string& key,
                          const std::string& msg) {
  const Position p = locate_key(text, section, key);
  throw ConfigError("line " + std::to_string(p.line) + ", column " + std::to_string(p.column) + ": " + msg);
}

std::vector<double> geometric_grid(double lo, double hi, int k) {
  std::vector<double> g(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double t = k == 1 ? 0.0 : static_cast<double>(i) / (k - 1);
    g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, t);
  }
  g.back() = hi;
  return g;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.model = model;
  e.n = n;
  e.delta = delta;
  e.lambda_grid = lambda_grid;
  e.ensemble = ensemble;
  e.trials = trials;
  e.seed = seed;
  e.tol = tol;
  e.max_iter = max_iter;
  return e;
}

SignalDist parse_signal(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (s.rfind("block(", 0) != 0) return parse_dist(text);
  if (s.back() != ')') throw ConfigError("block signal: missing ')'");
  std::vector<double> args;
  std::stringstream ss(s.substr(6, s.size() - 7));
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size()) {
      throw ConfigError("block signal: bad number '" + item + "'");
    }
    args.push_back(v);
  }
  if (args.size() != 3) throw ConfigError("block signal needs block(t, zero_prob, variance)");
  if (args[0] != std::floor(args[0])) throw ConfigError("block length must be an integer");
  try {
    return BlockSignalDist(static_cast<int>(args[0]), args[1], args[2]);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("block signal: ") + e.what());
  }
}

std::string signal_to_string(const SignalDist& s) {
  if (const auto* d = std::get_if<ScalarDist>(&s)) return d->to_string();
  const auto& b = std::get<BlockSignalDist>(s);
  return "block(" + std::to_string(b.block_len) + ", " + fmt(b.zero_prob) + ", " + fmt(b.active_variance) + ")";
}

std::set<std::string> apply_config_text(RunConfig& cfg, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const Position p = position_at(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    const auto cut = what.find("; ");
    if (cut != std::string::npos) what = what.substr(cut + 2);
    throw ConfigError("line " + std::to_string(p.line) + ", column " + std::to_string(p.column) +
                      ": malformed config: " + what);
  }
  if (!doc.is_object()) throw ConfigError("line 1, column 1: the config must be a JSON object");

  std::set<std::string> set;
  auto number = [&](const std::string& sec, const std::string& key, const json& v) {
    if (!v.is_number()) fail_at(text, sec, key, sec + "." + key + " must be a number");
    return v.get<double>();
  };
  auto integer = [&](const std::string& sec, const std::string& key, const json& v) {
    if (!v.is_number_integer()) fail_at(text, sec, key, sec + "." + key + " must be an integer");
    return v.get<long long>();
  };
  auto string = [&](const std::string& sec, const std::string& key, const json& v) {
    if (!v.is_string()) fail_at(text, sec, key, sec + "." + key + " must be a string");
    return v.get<std::string>();
  };
  auto numbers = [&](const std::string& sec, const std::string& key, const json& v) {
    if (!v.is_array()) fail_at(text, sec, key, sec + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail_at(text, sec, key, sec + "." + key + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  };
  // Domain errors from the parsers are reported at the key.
  auto guarded = [&](const std::string& sec, const std::string& key, const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      fail_at(text, sec, key, sec + "." + key + ": " + e.what());
    }
  };

  const std::map<std::string, std::map<std::string, std::function<void(const std::string&, const std::string&,
                                                                        const json&)>>>
      schema = {
          {"model",
           {{"loss", [&](auto& s, auto& k, const json& v) {
               const std::string x = string(s, k, v);
               guarded(s, k, [&] { parse_loss_name(x); });
               cfg.model.loss = x;
             }},
            {"reg", [&](auto& s, auto& k, const json& v) {
               const std::string x = string(s, k, v);
               guarded(s, k, [&] { parse_reg_name(x); });
               cfg.model.reg = x;
             }},
            {"noise", [&](auto& s, auto& k, const json& v) {
               const std::string x = string(s, k, v);
               guarded(s, k, [&] { cfg.model.noise = parse_dist(x); });
             }},
            {"signal", [&](auto& s, auto& k, const json& v) {
               const std::string x = string(s, k, v);
               guarded(s, k, [&] { cfg.model.signal = parse_signal(x); });
             }}}},
          {"problem",
           {{"delta", [&](auto& s, auto& k, const json& v) { cfg.delta = number(s, k, v); }},
            {"lambda", [&](auto& s, auto& k, const json& v) { cfg.lambda = number(s, k, v); }}}},
          {"experiment",
           {{"n", [&](auto& s, auto& k, const json& v) { cfg.n = static_cast<int>(integer(s, k, v)); }},
            {"lambda_grid", [&](auto& s, auto& k, const json& v) { cfg.lambda_grid = numbers(s, k, v); }},
            {"ensemble", [&](auto& s, auto& k, const json& v) {
               const std::string x = string(s, k, v);
               guarded(s, k, [&] { cfg.ensemble = parse_ensemble(x); });
             }},
            {"trials", [&](auto& s, auto& k, const json& v) { cfg.trials = static_cast<int>(integer(s, k, v)); }},
            {"seed", [&](auto& s, auto& k, const json& v) {
               if (!v.is_number_unsigned()) fail_at(text, s, k, "experiment.seed must be a nonnegative integer");
               cfg.seed = v.get<std::uint64_t>();
             }},
            {"tol", [&](auto& s, auto& k, const json& v) { cfg.tol = number(s, k, v); }},
            {"max_iter", [&](auto& s, auto& k, const json& v) { cfg.max_iter = static_cast<int>(integer(s, k, v)); }}}},
          {"sweep",
           {{"axis", [&](auto& s, auto& k, const json& v) {
               const std::string x = string(s, k, v);
               if (x == "lambda") cfg.axis = SweepAxis::Lambda;
               else if (x == "delta") cfg.axis = SweepAxis::Delta;
               else fail_at(text, s, k, "sweep.axis must be \"lambda\" or \"delta\"");
             }},
            {"values", [&](auto& s, auto& k, const json& v) { cfg.sweep_values = numbers(s, k, v); }}}},
          {"output",
           {{"path", [&](auto& s, auto& k, const json& v) { cfg.output_path = string(s, k, v); }},
            {"format", [&](auto& s, auto& k, const json& v) {
               const std::string x = string(s, k, v);
               if (x != "csv" && x != "json") fail_at(text, s, k, "output.format must be \"csv\" or \"json\"");
               cfg.format = x;
             }}}},
      };

  for (const auto& [section, body] : doc.items()) {
    const auto sit = schema.find(section);
    if (sit == schema.end()) fail_at(text, "", section, "unknown section '" + section + "'");
    if (!body.is_object()) fail_at(text, "", section, "section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      const auto kit = sit->second.find(key);
      if (kit == sit->second.end()) fail_at(text, section, key, "unknown key '" + section + "." + key + "'");
      kit->second(section, key, value);
      set.insert(section + "." + key);
    }
  }
  cfg.assigned.insert(set.begin(), set.end());
  return set;
}

std::set<std::string> apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return apply_config_text(cfg, ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<std::string> preset_names() {
  return {"ls", "ridge-ls", "cone-ls", "genlasso", "sqrt-lasso", "lad-l1", "lad-l1-fig2", "huber-l1", "group-lasso"};
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  const ScalarDist sparse_signal = parse_dist("mix(0.9*delta(0), 0.1*normal(0, 10))");
  if (name == "ls") {
    c.model = {"square", "zero", ScalarDist::normal(0, 1), ScalarDist::normal(0, 1)};
    c.delta = 2.0;
    c.lambda = 0.0;
    c.lambda_grid = {0.0};
  } else if (name == "ridge-ls") {
    c.model = {"square", "ridge", ScalarDist::normal(0, 1), ScalarDist::normal(0, 1)};
    c.delta = 2.0;
    c.lambda = 1.0;
    c.lambda_grid = {1.0};
    c.trials = 20;
  } else if (name == "cone-ls") {
    c.model = {"square", "cone(0.35)", ScalarDist::normal(0, 1), ScalarDist::normal(0, 1)};
    c.delta = 1.0;
    c.lambda = 1.0;
  } else if (name == "genlasso") {
    c.model = {"square", "l1", parse_dist("mix(0.9*delta(0), 0.1*normal(0, 1))"), sparse_signal};
    c.delta = 1.2;
    c.lambda = 1.0;
    c.n = 768;
    c.trials = 5;
    c.lambda_grid = geometric_grid(0.05, 10.0, 15);
  } else if (name == "sqrt-lasso") {
    c.model = {"sqrt_l2", "l1", ScalarDist::normal(0, 0.09), sparse_signal};
    c.delta = 0.75;
    c.lambda = 1.0;
    c.lambda_grid = geometric_grid(0.1, 3.0, 10);
  } else if (name == "lad-l1") {
    c.model = {"abs", "l1", parse_dist("mix(0.7*delta(0), 0.3*normal(0, 1))"), sparse_signal};
    c.delta = 1.2;
    c.lambda = 1.0;
    c.n = 768;
    c.trials = 5;
    c.lambda_grid = geometric_grid(0.05, 10.0, 15);
  } else if (name == "lad-l1-fig2") {
    c.model = {"abs", "l1", parse_dist("mix(0.9*delta(0), 0.1*normal(0, 1))"), sparse_signal};
    c.delta = 1.2;
    c.lambda = 1.0;
    c.n = 768;
    c.trials = 5;
    c.lambda_grid = geometric_grid(0.05, 10.0, 15);
  } else if (name == "huber-l1") {
    c.model = {"huber(1)", "l1", parse_dist("mix(0.9*delta(0), 0.1*cauchy(0, 1))"), sparse_signal};
    c.delta = 0.7;
    c.lambda = 1.0;
    c.n = 1024;
    c.trials = 5;
    c.lambda_grid = geometric_grid(0.1, 10.0, 12);
  } else if (name == "group-lasso") {
    c.model = {"sqrt_l2", "block_l2(3)", ScalarDist::normal(0, 0.09), BlockSignalDist(3, 0.95, 1.0)};
    c.delta = 0.75;
    c.lambda = 1.0;
    c.n = 1536;
    c.trials = 10;
    c.lambda_grid = geometric_grid(0.1, 3.0, 10);
    c.notes.push_back("noise read as N(0, 0.09): the printed density 0.3 phi(z) is taken as scale 0.3");
  } else {
    std::string all;
    for (const auto& p : preset_names()) all += (all.empty() ? "" : ", ") + p;
    throw ConfigError("unknown preset '" + name + "' (" + all + ")");
  }
  if (name == "genlasso" || name == "sqrt-lasso" || name.rfind("lad-l1", 0) == 0 || name == "huber-l1") {
    c.notes.push_back("signal 0.1 phi(x)/sqrt(0.1) read as a N(0, 10) component, so E x0^2 = 1");
  }
  return c;
}

std::string canonical_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["model"]["loss"] = c.model.loss;
  j["model"]["reg"] = c.model.reg;
  j["model"]["noise"] = c.model.noise.to_string();
  j["model"]["signal"] = signal_to_string(c.model.signal);
  j["problem"]["delta"] = c.delta;
  j["problem"]["lambda"] = c.lambda;
  j["experiment"]["n"] = c.n;
  j["experiment"]["lambda_grid"] = c.lambda_grid;
  j["experiment"]["ensemble"] = ensemble_name(c.ensemble);
  j["experiment"]["trials"] = c.trials;
  j["experiment"]["seed"] = c.seed;
  j["experiment"]["tol"] = c.tol;
  j["experiment"]["max_iter"] = c.max_iter;
  j["sweep"]["axis"] = c.axis == SweepAxis::Lambda ? "lambda" : "delta";
  j["sweep"]["values"] = c.sweep_values;
  return j.dump();
}

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace spolab
