#include "spolab/dist.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "spolab/errors.hpp"

namespace spolab {

namespace {

constexpr double kWeightTol = 1e-12;

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double sample_atom(const Atom& atom, CounterRng& rng) {
  return std::visit(
      [&rng](const auto& a) -> double {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return a.value;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return a.mean + std::sqrt(a.variance) * standard_normal(rng);
        } else {
          return a.location + a.scale * std::tan(std::numbers::pi * (rng.uniform_open() - 0.5));
        }
      },
      atom);
}

QuadRule build_gauss_hermite(std::size_t n) {
  // Golub-Welsch for the probabilists' Hermite recurrence, then Newton polish
  // on the orthonormal polynomials and Christoffel weights.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double off = std::sqrt(static_cast<double>(k));
    jacobi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = off;
    jacobi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi, Eigen::EigenvaluesOnly);
  QuadRule rule;
  rule.kind = QuadRule::Kind::GaussHermite;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  auto orthonormal = [n](double x, double& hn, double& hnm1, double& sumsq) {
    double prev = 0.0;
    double cur = 1.0;
    sumsq = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(static_cast<double>(k + 1));
      prev = cur;
      cur = next;
      if (k + 1 < n) sumsq += cur * cur;
    }
    hn = cur;
    hnm1 = prev;
  };

  for (std::size_t i = 0; i < n; ++i) {
    double x = eig.eigenvalues()(static_cast<Eigen::Index>(i));
    double hn = 0.0, hnm1 = 0.0, sumsq = 0.0;
    for (int it = 0; it < 8; ++it) {
      orthonormal(x, hn, hnm1, sumsq);
      const double step = hn / (std::sqrt(static_cast<double>(n)) * hnm1);
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    orthonormal(x, hn, hnm1, sumsq);
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / sumsq;
  }
  // Symmetrize and renormalize against rounding.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

QuadRule build_tail_mapped(std::size_t n) {
  QuadRule rule;
  rule.kind = QuadRule::Kind::TailMapped;
  rule.nodes.resize(n);
  rule.weights.assign(n, 1.0 / static_cast<double>(n));
  const double h = std::numbers::pi / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = -0.5 * std::numbers::pi + (static_cast<double>(k) + 0.5) * h;
    rule.nodes[k] = std::tan(u);
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

template <typename Builder>
const QuadRule& cached_rule(std::map<std::size_t, QuadRule>& cache, std::mutex& mu, std::size_t order,
                            Builder build) {
  if (order == 0) throw DomainError("quadrature order must be positive");
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build(order)).first;
  return it->second;
}

// Growth probe for integrands against heavy tails: anything with at least
// linear growth has no finite Cauchy expectation.
void require_sublinear(const std::function<double(double)>& f) {
  const double near = std::max(std::abs(f(1e6)), std::abs(f(-1e6)));
  const double far = std::max(std::abs(f(1e9)), std::abs(f(-1e9)));
  if (!std::isfinite(far) || far > 100.0 * std::max(near, 1.0)) {
    throw NonIntegrable("integrand grows too fast for a Cauchy component");
  }
}

void require_bounded_tails(const PiecewisePoly& p) {
  if (p.size() == 0) return;
  auto unbounded = [](const PolyPiece& piece) {
    return piece.coef[1] != 0.0 || piece.coef[2] != 0.0 || piece.coef[3] != 0.0;
  };
  const PolyPiece& first = p[0];
  const PolyPiece& last = p[p.size() - 1];
  if ((std::isinf(first.lo) && unbounded(first)) || (std::isinf(last.hi) && unbounded(last))) {
    throw NonIntegrable("piecewise integrand grows too fast for a Cauchy component");
  }
}

}  // namespace

double standard_normal(CounterRng& rng) {
  const double u1 = rng.uniform_open();
  const double u2 = rng.uniform_open();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------
// ScalarDist

ScalarDist::ScalarDist(std::vector<Component> components) {
  if (components.empty()) throw DomainError("distribution needs at least one component");
  double total = 0.0;
  for (auto& c : components) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) throw DomainError("mixture weights must be nonnegative");
    total += c.weight;
    if (auto* g = std::get_if<Gaussian>(&c.atom)) {
      if (!(g->variance >= 0.0) || !std::isfinite(g->variance) || !std::isfinite(g->mean)) {
        throw DomainError("Gaussian variance must be finite and nonnegative");
      }
      if (g->variance == 0.0) c.atom = PointMass{g->mean};
    } else if (auto* cy = std::get_if<Cauchy>(&c.atom)) {
      if (!(cy->scale > 0.0) || !std::isfinite(cy->scale)) throw DomainError("Cauchy scale must be positive");
    } else if (!std::isfinite(std::get<PointMass>(c.atom).value)) {
      throw DomainError("point mass must be finite");
    }
  }
  if (std::abs(total - 1.0) > kWeightTol) throw DomainError("mixture weights must sum to one");
  components_ = std::move(components);
}

ScalarDist ScalarDist::point(double value) { return ScalarDist({{1.0, PointMass{value}}}); }

ScalarDist ScalarDist::normal(double mean, double variance) { return ScalarDist({{1.0, Gaussian{mean, variance}}}); }

ScalarDist ScalarDist::cauchy(double location, double scale) {
  return ScalarDist({{1.0, Cauchy{location, scale}}});
}

bool ScalarDist::has_cauchy() const {
  return std::any_of(components_.begin(), components_.end(), [](const Component& c) {
    return c.weight > 0.0 && std::holds_alternative<Cauchy>(c.atom);
  });
}

double ScalarDist::mean() const {
  if (has_cauchy()) throw DomainError("mean is undefined for a Cauchy component");
  double m = 0.0;
  for (const auto& c : components_) {
    if (const auto* p = std::get_if<PointMass>(&c.atom)) m += c.weight * p->value;
    else if (const auto* g = std::get_if<Gaussian>(&c.atom)) m += c.weight * g->mean;
  }
  return m;
}

double ScalarDist::second_moment() const {
  if (has_cauchy()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (const auto& c : components_) {
    if (const auto* p = std::get_if<PointMass>(&c.atom)) m += c.weight * p->value * p->value;
    else if (const auto* g = std::get_if<Gaussian>(&c.atom)) m += c.weight * (g->mean * g->mean + g->variance);
  }
  return m;
}

double ScalarDist::atom_probability(double value) const {
  double p = 0.0;
  for (const auto& c : components_) {
    if (const auto* pm = std::get_if<PointMass>(&c.atom); pm && pm->value == value) p += c.weight;
  }
  return p;
}

double ScalarDist::sample_one(CounterRng& rng) const {
  std::size_t idx = components_.size() - 1;
  if (components_.size() > 1) {
    const double u = rng.uniform_open();
    double acc = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      acc += components_[i].weight;
      if (u < acc) {
        idx = i;
        break;
      }
    }
  }
  return sample_atom(components_[idx].atom, rng);
}

std::vector<double> ScalarDist::sample(CounterRng& rng, std::size_t count) const {
  std::vector<double> out(count);
  for (auto& v : out) v = sample_one(rng);
  return out;
}

std::string ScalarDist::to_string() const {
  auto atom_str = [](const Atom& atom) {
    return std::visit(
        [](const auto& a) -> std::string {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, PointMass>) {
            return "delta(" + format_number(a.value) + ")";
          } else if constexpr (std::is_same_v<T, Gaussian>) {
            return "normal(" + format_number(a.mean) + ", " + format_number(a.variance) + ")";
          } else {
            return "cauchy(" + format_number(a.location) + ", " + format_number(a.scale) + ")";
          }
        },
        atom);
  };
  if (components_.size() == 1) return atom_str(components_[0].atom);
  std::string out = "mix(";
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (i) out += ", ";
    out += format_number(components_[i].weight) + "*" + atom_str(components_[i].atom);
  }
  return out + ")";
}

bool ScalarDist::operator==(const ScalarDist& other) const {
  if (components_.size() != other.components_.size()) return false;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& a = components_[i];
    const auto& b = other.components_[i];
    if (a.weight != b.weight || a.atom.index() != b.atom.index()) return false;
    const bool same = std::visit(
        [&b](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          const auto& y = std::get<T>(b.atom);
          if constexpr (std::is_same_v<T, PointMass>) return x.value == y.value;
          else if constexpr (std::is_same_v<T, Gaussian>) return x.mean == y.mean && x.variance == y.variance;
          else return x.location == y.location && x.scale == y.scale;
        },
        a.atom);
    if (!same) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class DistParser {
 public:
  explicit DistParser(std::string_view text) : text_(text) {}

  ScalarDist parse() {
    skip_ws();
    const std::string head = peek_ident();
    ScalarDist result = ScalarDist::point(0.0);
    if (head == "mix") {
      expect_ident("mix");
      expect('(');
      std::vector<Component> comps;
      do {
        skip_ws();
        const double w = number();
        expect('*');
        comps.push_back({w, atom()});
        skip_ws();
      } while (accept(','));
      expect(')');
      result = build(std::move(comps));
    } else {
      result = build({{1.0, atom()}});
    }
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return result;
  }

 private:
  ScalarDist build(std::vector<Component> comps) {
    try {
      return ScalarDist(std::move(comps));
    } catch (const DomainError& e) {
      fail(e.what());
    }
  }

  Atom atom() {
    skip_ws();
    const std::size_t start = pos_;
    const std::string name = ident();
    expect('(');
    Atom a;
    if (name == "delta") {
      a = PointMass{number()};
    } else if (name == "normal") {
      const double m = number();
      expect(',');
      a = Gaussian{m, number()};
    } else if (name == "cauchy") {
      const double l = number();
      expect(',');
      a = Cauchy{l, number()};
    } else {
      pos_ = start;
      fail("unknown distribution '" + name + "'");
    }
    expect(')');
    return a;
  }

  std::string peek_ident() {
    const std::size_t save = pos_;
    std::string s = ident(false);
    pos_ = save;
    return s;
  }

  std::string ident(bool required = true) {
    skip_ws();
    std::string s;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_]))));
      ++pos_;
    }
    if (required && s.empty()) fail("expected a distribution name");
    return s;
  }

  void expect_ident(const std::string& want) {
    if (ident() != want) fail("expected '" + want + "'");
  }

  double number() {
    skip_ws();
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    if (begin != end && *begin == '+') ++begin;
    double v = 0.0;
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(res.ptr - text_.data());
    return v;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("distribution literal, column " + std::to_string(pos_ + 1) + ": " + msg + " in '" +
                      std::string(text_) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarDist parse_dist(std::string_view text) { return DistParser(text).parse(); }

// ---------------------------------------------------------------------------
// Block signal

BlockSignalDist::BlockSignalDist(int t, double p0, double var) : block_len(t), zero_prob(p0), active_variance(var) {
  if (t < 1) throw DomainError("block length must be at least 1");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw DomainError("zero probability must lie in [0, 1]");
  if (!(var >= 0.0) || !std::isfinite(var)) throw DomainError("active variance must be finite and nonnegative");
}

std::vector<double> BlockSignalDist::sample(CounterRng& rng, std::size_t count) const {
  const auto t = static_cast<std::size_t>(block_len);
  if (count % t != 0) throw DomainError("signal length must be a multiple of the block length");
  std::vector<double> out(count, 0.0);
  const double sd = std::sqrt(active_variance);
  for (std::size_t b = 0; b < count / t; ++b) {
    const bool zero = rng.uniform_open() < zero_prob;
    for (std::size_t i = 0; i < t; ++i) {
      const double g = standard_normal(rng);
      out[b * t + i] = zero ? 0.0 : sd * g;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature

const QuadRule& gauss_hermite_rule(std::size_t order) {
  static std::map<std::size_t, QuadRule> cache;
  static std::mutex mu;
  return cached_rule(cache, mu, order, build_gauss_hermite);
}

const QuadRule& tail_mapped_rule(std::size_t order) {
  static std::map<std::size_t, QuadRule> cache;
  static std::mutex mu;
  return cached_rule(cache, mu, order, build_tail_mapped);
}

double expectation(const ScalarDist& dist, double c, const std::function<double(double)>& integrand,
                   const ExpectationOptions& opts) {
  const QuadRule& gh = gauss_hermite_rule(opts.hermite_order);
  auto gauss = [&](double mean, double sd) {
    if (sd == 0.0) return integrand(mean);
    double acc = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) acc += gh.weights[i] * integrand(mean + sd * gh.nodes[i]);
    return acc;
  };
  if (dist.has_cauchy()) require_sublinear(integrand);
  double total = 0.0;
  for (const auto& comp : dist.components()) {
    if (comp.weight == 0.0) continue;
    double part = 0.0;
    if (const auto* p = std::get_if<PointMass>(&comp.atom)) {
      part = gauss(p->value, std::abs(c));
    } else if (const auto* g = std::get_if<Gaussian>(&comp.atom)) {
      part = gauss(g->mean, std::sqrt(c * c + g->variance));
    } else {
      const auto& cy = std::get<Cauchy>(comp.atom);
      const QuadRule& tail = tail_mapped_rule(opts.tail_order);
      for (std::size_t k = 0; k < tail.nodes.size(); ++k) {
        part += tail.weights[k] * gauss(cy.location + cy.scale * tail.nodes[k], std::abs(c));
      }
    }
    total += comp.weight * part;
  }
  return total;
}

double expectation(const ScalarDist& dist, double c, const PiecewisePoly& integrand, const ExpectationOptions& opts) {
  if (dist.has_cauchy()) require_bounded_tails(integrand);
  double total = 0.0;
  for (const auto& comp : dist.components()) {
    if (comp.weight == 0.0) continue;
    double part = 0.0;
    if (const auto* p = std::get_if<PointMass>(&comp.atom)) {
      part = gaussian_expectation(integrand, p->value, std::abs(c));
    } else if (const auto* g = std::get_if<Gaussian>(&comp.atom)) {
      part = gaussian_expectation(integrand, g->mean, std::sqrt(c * c + g->variance));
    } else {
      const auto& cy = std::get<Cauchy>(comp.atom);
      const QuadRule& tail = tail_mapped_rule(opts.tail_order);
      for (std::size_t k = 0; k < tail.nodes.size(); ++k) {
        part += tail.weights[k] * gaussian_expectation(integrand, cy.location + cy.scale * tail.nodes[k], std::abs(c));
      }
    }
    total += comp.weight * part;
  }
  return total;
}

}  // namespace spolab
