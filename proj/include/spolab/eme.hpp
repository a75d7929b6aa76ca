#pragma once

#include <string>
#include <variant>

#include "spolab/dist.hpp"
#include "spolab/moreau.hpp"

namespace spolab {

struct EmeEval {
  double value = 0.0;
  double d_c = 0.0;
  double d_tau = 0.0;
};

/// Expected Moreau envelope E[env(cG + Z; tau) - f(Z)] and its partials.
///
/// One type serves both the loss side (L) and the regularizer side (F).
/// Separable kinds integrate the exact piecewise-polynomial envelope against
/// each mixture atom; the other kinds are closed forms.
class EmeProvider {
 public:
  enum class Kind { SeparableLoss, SeparableReg, QuadLoss, QuadReg, SqrtLasso, Cone, Block };

  /// Throws InadmissiblePair for a Cauchy noise atom unless the loss is Abs or Huber.
  static EmeProvider separable_loss(LossSpec loss, ScalarDist noise);
  /// Throws InadmissiblePair for a Cauchy signal atom.
  static EmeProvider separable_reg(RegSpec reg, ScalarDist signal);
  static EmeProvider quad_loss(double sigma2);
  static EmeProvider quad_reg(double sigmax2);
  static EmeProvider sqrt_lasso(double sigma2, double delta);
  static EmeProvider cone(double dbar);
  static EmeProvider block(BlockSignalDist signal);
  /// F identically zero (no regularization).
  static EmeProvider zero();

  /// Same provider with a constant added to the value (L0 moves the other way).
  EmeProvider shifted(double offset) const;

  Kind kind() const { return kind_; }
  bool is_zero() const;

  double value(double c, double tau) const { return evaluate(c, tau).value; }
  double d_c(double c, double tau) const { return evaluate(c, tau).d_c; }
  double d_tau(double c, double tau) const { return evaluate(c, tau).d_tau; }
  EmeEval evaluate(double c, double tau) const;

  /// E[f(Z)] in [0, +inf]; only meaningful on the loss side.
  double L0() const;

  /// E[e''(cG + Z; tau)] by a central difference of E[e'] in a shift of the
  /// argument. Throws NotApplicable for kinks without curvature (Abs) and for
  /// closed-form kinds other than QuadLoss.
  double mean_curvature(double c, double tau, double h = 1e-5) const;

  // Parameters, for solvers that specialize on the kind.
  const LossSpec& loss() const { return loss_; }
  const RegSpec& reg() const { return reg_; }
  const ScalarDist& dist() const { return dist_; }
  const BlockSignalDist& block_signal() const { return block_; }
  double sigma2() const { return sigma2_; }
  double delta() const { return delta_; }
  double dbar() const { return dbar_; }
  double offset() const { return offset_; }

  std::string describe() const;

 private:
  EmeProvider() : dist_(ScalarDist::point(0.0)), block_(1, 0.0, 1.0) {}

  EmeEval separable(const ScalarFn& f, double c, double tau) const;
  EmeEval block_eval(double c, double tau) const;

  Kind kind_ = Kind::QuadLoss;
  LossSpec loss_{};
  RegSpec reg_{};
  ScalarDist dist_;
  BlockSignalDist block_;
  double sigma2_ = 0.0;
  double delta_ = 1.0;
  double dbar_ = 0.0;
  double offset_ = 0.0;
  double base_l0_ = 0.0;
};

}  // namespace spolab
