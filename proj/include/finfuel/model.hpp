#pragma once

#include <functional>

namespace finfuel {

/// Fill-cost curve evaluated at one inventory level.
struct PhiValue {
  double value;
  double slope;
  double curvature;
};

/// User-supplied fill-cost curve. Must be decreasing, convex, with
/// value(1) == 0; all callables are evaluated on [0, 1] only.
struct PhiCurve {
  std::function<double(double)> value;
  std::function<double(double)> slope;
  std::function<double(double)> curvature;
};

/// Terms driving the action/inaction split at inventory c:
///   r(c) = 1 - c - phi(c), the net saving of one unit bought now versus never,
///   k(c) = lambda * (1 + phi'(c)), the marginal running penalty.
/// r has roots c_o and 1 and a single interior maximum c_hat where k vanishes.
struct RunningTerms {
  double r;
  double k;
};

/// Immutable problem description: discount rate, fill-cost curve, and the
/// derived critical inventory levels. Cheap to copy; all queries are const.
class Model {
 public:
  /// Quadratic family phi(c) = a(1-c) + (1-c)^2 with a in (0,1).
  /// Critical levels come out in closed form.
  static Model quadratic(double lambda, double a);

  /// Arbitrary curve; c_hat and c_o are located by bracketed bisection to
  /// 1e-12. Throws std::invalid_argument for degenerate curves (no interior
  /// sign change of r or of 1 + phi').
  static Model from_curve(double lambda, PhiCurve curve);

  double lambda() const { return lambda_; }
  /// Quadratic-family coefficient; NaN when built from a custom curve.
  double a() const { return a_; }
  double c_hat() const { return c_hat_; }
  double c_o() const { return c_o_; }
  double r_hat() const { return r_hat_; }
  double gamma_o() const { return gamma_o_; }
  double sqrt_two_lambda() const { return sqrt2lam_; }

  /// Curve data at c; throws std::invalid_argument outside [0, 1].
  PhiValue phi(double c) const;

  /// r and k at c; throws std::invalid_argument outside [0, 1].
  RunningTerms running(double c) const;

  /// d/dc of r(c), equal to -k(c)/lambda.
  double r_slope(double c) const;

 private:
  Model() = default;

  double lambda_ = 0;
  double a_ = 0;
  double sqrt2lam_ = 0;
  double c_hat_ = 0;
  double c_o_ = 0;
  double r_hat_ = 0;
  double gamma_o_ = 0;
  PhiCurve curve_;
};

}  // namespace finfuel
