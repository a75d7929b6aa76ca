#pragma once

#include <array>
#include <cstddef>

namespace spolab {

double normal_pdf(double x);
/// Upper tail Q(x) = P(G > x), accurate deep in both tails.
double normal_sf(double x);
double normal_cdf(double x);
/// P(a < G <= b) without cancellation when both ends sit in the same tail.
double normal_interval(double a, double b);

/// Cubic polynomial c0 + c1 x + c2 x^2 + c3 x^3 restricted to [lo, hi].
struct PolyPiece {
  double lo;
  double hi;
  std::array<double, 4> coef{};

  double operator()(double x) const {
    return coef[0] + x * (coef[1] + x * (coef[2] + x * coef[3]));
  }
};

/// Piecewise polynomial on a partition of the real line (at most four pieces).
///
/// Every envelope, envelope derivative and loss in the catalog is piecewise
/// polynomial of degree <= 2, so Gaussian expectations of these objects reduce
/// to truncated normal moments and are exact up to rounding.
class PiecewisePoly {
 public:
  static constexpr std::size_t kCapacity = 4;

  PiecewisePoly() = default;

  void add(double lo, double hi, double c0, double c1 = 0.0, double c2 = 0.0, double c3 = 0.0);

  std::size_t size() const { return count_; }
  const PolyPiece& operator[](std::size_t i) const { return pieces_[i]; }

  double operator()(double x) const;

  /// Pointwise product with the affine function (x - shift).
  PiecewisePoly times_affine(double shift) const;
  /// Pointwise square; requires every piece to have degree <= 1.
  PiecewisePoly squared() const;

 private:
  std::array<PolyPiece, kCapacity> pieces_{};
  std::size_t count_ = 0;
};

/// E[p(X)] for X ~ N(mean, sd^2); sd == 0 evaluates p at the mean.
double gaussian_expectation(const PiecewisePoly& p, double mean, double sd);

/// E[p_k(X)] for several polynomials sharing one partition; the truncated
/// moments are computed once per piece. out must hold count entries.
void gaussian_expectations(const PiecewisePoly* polys, std::size_t count, double mean, double sd, double* out);

}  // namespace spolab
