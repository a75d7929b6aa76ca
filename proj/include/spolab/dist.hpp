#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spolab/gauss_poly.hpp"
#include "spolab/rng.hpp"

namespace spolab {

struct PointMass {
  double value = 0.0;
};

struct Gaussian {
  double mean = 0.0;
  double variance = 1.0;
};

struct Cauchy {
  double location = 0.0;
  double scale = 1.0;
};

using Atom = std::variant<PointMass, Gaussian, Cauchy>;

struct Component {
  double weight = 1.0;
  Atom atom;
};

/// Finite mixture of point masses, Gaussians and Cauchy laws.
///
/// Immutable once built. Gaussian atoms with zero variance are stored as
/// point masses; weights must be nonnegative and sum to one (1e-12).
class ScalarDist {
 public:
  explicit ScalarDist(std::vector<Component> components);

  static ScalarDist point(double value);
  static ScalarDist normal(double mean, double variance);
  static ScalarDist cauchy(double location, double scale);

  const std::vector<Component>& components() const { return components_; }

  bool has_cauchy() const;
  /// Mean; throws DomainError when a Cauchy atom has positive weight.
  double mean() const;
  /// E[X^2]; +infinity when a Cauchy atom has positive weight.
  double second_moment() const;
  /// Probability of the exact value (sum of matching point-mass weights).
  double atom_probability(double value) const;

  /// i.i.d. draws: component by weight, then the atom.
  std::vector<double> sample(CounterRng& rng, std::size_t count) const;
  double sample_one(CounterRng& rng) const;

  /// Canonical literal, e.g. "mix(0.9*delta(0), 0.1*normal(0, 10))".
  std::string to_string() const;

  bool operator==(const ScalarDist& other) const;

 private:
  std::vector<Component> components_;
};

/// Box-Muller draw from N(0, 1); consumes two uniforms.
double standard_normal(CounterRng& rng);

/// Parse the distribution literal syntax (case-insensitive, whitespace tolerant):
///   delta(v) | normal(mean, variance) | cauchy(location, scale)
///   | mix(w1*atom1, w2*atom2, ...)
/// Throws ConfigError with the offending column on malformed input.
ScalarDist parse_dist(std::string_view text);

/// Block-sparse signal: each length-t block is zero with probability zero_prob,
/// otherwise its entries are i.i.d. N(0, active_variance).
struct BlockSignalDist {
  int block_len = 1;
  double zero_prob = 0.0;
  double active_variance = 1.0;

  BlockSignalDist(int t, double p0, double var);

  /// Draws count = (number of blocks) * t coordinates; count must be a multiple of t.
  std::vector<double> sample(CounterRng& rng, std::size_t count) const;
  double second_moment() const { return (1.0 - zero_prob) * active_variance; }
};

struct QuadRule {
  enum class Kind { GaussHermite, TailMapped };
  std::vector<double> nodes;
  std::vector<double> weights;
  Kind kind = Kind::GaussHermite;
};

/// Gauss-Hermite rule for the standard normal (probabilists' weight), weights sum to 1.
const QuadRule& gauss_hermite_rule(std::size_t order = 81);
/// Midpoint rule in u on (-pi/2, pi/2) for the standard Cauchy law: z = tan(u), weights 1/N.
const QuadRule& tail_mapped_rule(std::size_t order = 2000);

struct ExpectationOptions {
  std::size_t hermite_order = 81;
  std::size_t tail_order = 2000;
};

/// E[f(c G + Z)] with G ~ N(0, 1) independent of Z ~ dist.
///
/// Point masses are enumerated exactly, Gaussian atoms are folded with c G into
/// a single Gaussian and integrated by Gauss-Hermite, Cauchy atoms use the
/// tail-mapped rule (nested with Gauss-Hermite over G when c != 0).
/// Throws NonIntegrable when f grows at least linearly and dist has a Cauchy atom.
double expectation(const ScalarDist& dist, double c, const std::function<double(double)>& integrand,
                   const ExpectationOptions& opts = {});

/// Same expectation for a piecewise polynomial integrand, evaluated with
/// closed-form truncated normal moments on point-mass and Gaussian atoms.
double expectation(const ScalarDist& dist, double c, const PiecewisePoly& integrand,
                   const ExpectationOptions& opts = {});

}  // namespace spolab
