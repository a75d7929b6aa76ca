#pragma once

#include <span>
#include <string>

#include "spolab/gauss_poly.hpp"

namespace spolab {

/// Scalar convex functions with closed-form prox: Square = v^2/2, Abs = |v|,
/// Huber(rho), Zero. Both loss and separable regularizer catalogs map onto it.
struct ScalarFn {
  enum class Kind { Square, Abs, Huber, Zero };
  Kind kind = Kind::Square;
  double rho = 1.0;

  double operator()(double v) const;
};

struct LossSpec {
  enum class Kind { Square, Abs, Huber, Zero };
  Kind kind = Kind::Square;
  double rho = 1.0;

  static LossSpec square() { return {Kind::Square, 1.0}; }
  static LossSpec abs() { return {Kind::Abs, 1.0}; }
  static LossSpec huber(double rho);
  static LossSpec zero() { return {Kind::Zero, 1.0}; }

  ScalarFn scalar() const;
  double operator()(double v) const { return scalar()(v); }
  std::string name() const;
};

struct RegSpec {
  enum class Kind { L1, HalfSquare, Zero, BlockL2 };
  Kind kind = Kind::L1;
  int block_len = 1;

  static RegSpec l1() { return {Kind::L1, 1}; }
  static RegSpec half_square() { return {Kind::HalfSquare, 1}; }
  static RegSpec zero() { return {Kind::Zero, 1}; }
  static RegSpec block_l2(int t);

  bool separable() const { return kind != Kind::BlockL2 || block_len == 1; }
  /// Coordinatewise function; BlockL2 only when t == 1 (then it is |.|).
  ScalarFn scalar() const;
  std::string name() const;
};

/// The loss sqrt(n) * ||v||_2 (square-root LASSO); non-separable.
struct NonSepLossSpec {
  enum class Kind { SqrtL2 };
  Kind kind = Kind::SqrtL2;
  std::string name() const { return "sqrt_l2"; }
};

/// Cone constraint summarized by its statistical dimension ratio in (0, 1).
struct ConeRegSpec {
  double stat_dim_ratio;
  explicit ConeRegSpec(double dbar);
  std::string name() const;
};

double prox(const ScalarFn& f, double x, double tau);
double env(const ScalarFn& f, double x, double tau);
/// d/dx env = (x - prox) / tau.
double env_dx(const ScalarFn& f, double x, double tau);
/// d/dtau env = -env_dx^2 / 2.
double env_dtau(const ScalarFn& f, double x, double tau);

inline double prox(const LossSpec& f, double x, double tau) { return prox(f.scalar(), x, tau); }
inline double env(const LossSpec& f, double x, double tau) { return env(f.scalar(), x, tau); }
inline double env_dx(const LossSpec& f, double x, double tau) { return env_dx(f.scalar(), x, tau); }
inline double env_dtau(const LossSpec& f, double x, double tau) { return env_dtau(f.scalar(), x, tau); }
inline double prox(const RegSpec& f, double x, double tau) { return prox(f.scalar(), x, tau); }
inline double env(const RegSpec& f, double x, double tau) { return env(f.scalar(), x, tau); }
inline double env_dx(const RegSpec& f, double x, double tau) { return env_dx(f.scalar(), x, tau); }
inline double env_dtau(const RegSpec& f, double x, double tau) { return env_dtau(f.scalar(), x, tau); }

/// Envelope of the conjugate f* at (y, sigma). Abs, Square and Zero have their
/// own closed forms; Huber goes through the Moreau decomposition.
double conj_env(const ScalarFn& f, double y, double sigma);

/// Envelope of the Euclidean norm on R^t at a point of radius r (depends on r only).
double block_env(int t, double r, double tau);
/// In-place prox of thr * ||.||_2: v <- max(0, 1 - thr/||v||) v.
void shrink_norm(std::span<double> v, double thr);

/// Piecewise-polynomial forms in x for fixed tau, used by exact Gaussian expectations.
PiecewisePoly value_poly(const ScalarFn& f);
PiecewisePoly env_poly(const ScalarFn& f, double tau);
PiecewisePoly env_dx_poly(const ScalarFn& f, double tau);

}  // namespace spolab
