#include "spolab/gauss_poly.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>

namespace spolab {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;

struct TailTerms {
  double pdf;     // phi(t), zero at +-inf
  double t_pdf;   // t * phi(t)
  double t2_pdf;  // t^2 * phi(t)
};

TailTerms tail_terms(double t) {
  if (std::isinf(t)) return {0.0, 0.0, 0.0};
  const double p = normal_pdf(t);
  return {p, t * p, t * t * p};
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_interval(double a, double b) {
  if (b <= a) return 0.0;
  if (a >= 0.0) return normal_sf(a) - normal_sf(b);
  if (b <= 0.0) return normal_sf(-b) - normal_sf(-a);
  return 1.0 - normal_sf(b) - normal_sf(-a);
}

void PiecewisePoly::add(double lo, double hi, double c0, double c1, double c2, double c3) {
  assert(count_ < kCapacity);
  pieces_[count_++] = PolyPiece{lo, hi, {c0, c1, c2, c3}};
}

double PiecewisePoly::operator()(double x) const {
  for (std::size_t i = 0; i < count_; ++i) {
    if (x <= pieces_[i].hi || i + 1 == count_) return pieces_[i](x);
  }
  return 0.0;
}

PiecewisePoly PiecewisePoly::times_affine(double shift) const {
  PiecewisePoly out;
  for (std::size_t i = 0; i < count_; ++i) {
    const auto& c = pieces_[i].coef;
    assert(c[3] == 0.0);
    // (c0 + c1 x + c2 x^2)(x - s)
    out.add(pieces_[i].lo, pieces_[i].hi, -shift * c[0], c[0] - shift * c[1], c[1] - shift * c[2], c[2]);
  }
  return out;
}

PiecewisePoly PiecewisePoly::squared() const {
  PiecewisePoly out;
  for (std::size_t i = 0; i < count_; ++i) {
    const auto& c = pieces_[i].coef;
    assert(c[2] == 0.0 && c[3] == 0.0);
    out.add(pieces_[i].lo, pieces_[i].hi, c[0] * c[0], 2.0 * c[0] * c[1], c[1] * c[1]);
  }
  return out;
}

double gaussian_expectation(const PiecewisePoly& p, double mean, double sd) {
  double out = 0.0;
  gaussian_expectations(&p, 1, mean, sd, &out);
  return out;
}

void gaussian_expectations(const PiecewisePoly* polys, std::size_t count, double mean, double sd, double* out) {
  for (std::size_t k = 0; k < count; ++k) out[k] = 0.0;
  if (count == 0) return;
  if (sd == 0.0) {
    for (std::size_t k = 0; k < count; ++k) out[k] = polys[k](mean);
    return;
  }
  const PiecewisePoly& grid = polys[0];
  const double mu = mean;
  const double s = sd;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = (grid[i].lo - mu) / s;
    const double b = (grid[i].hi - mu) / s;
    if (!(b > a)) continue;
    // Standardized truncated moments M_j = int_a^b u^j phi(u) du.
    const TailTerms ta = tail_terms(a);
    const TailTerms tb = tail_terms(b);
    const double m0 = normal_interval(a, b);
    const double m1 = ta.pdf - tb.pdf;
    const double m2 = m0 + ta.t_pdf - tb.t_pdf;
    const double m3 = 2.0 * m1 + ta.t2_pdf - tb.t2_pdf;
    for (std::size_t k = 0; k < count; ++k) {
      assert(polys[k].size() == grid.size());
      const auto& c = polys[k][i].coef;
      // Expand sum_j c_j (mu + s u)^j in powers of u.
      const double u0 = c[0] + mu * (c[1] + mu * (c[2] + mu * c[3]));
      const double u1 = s * (c[1] + mu * (2.0 * c[2] + 3.0 * mu * c[3]));
      const double u2 = s * s * (c[2] + 3.0 * mu * c[3]);
      const double u3 = s * s * s * c[3];
      out[k] += u0 * m0 + u1 * m1 + u2 * m2 + u3 * m3;
    }
  }
}

}  // namespace spolab
