#pragma once

#include "finfuel/model.hpp"

namespace finfuel {

/// Fundamental exponential solutions of (1/2)u'' = lambda u at one point,
/// plus their ratio F = psi / phi, which maps the spot axis to (0, inf).
struct FundamentalAt {
  double x;
  double phi;    // exp(-sqrt(2 lambda) x), decreasing
  double psi;    // exp(+sqrt(2 lambda) x), increasing
  double big_f;  // exp(2 sqrt(2 lambda) x)
};

/// Evaluates the fundamental pair. Throws std::domain_error when
/// |sqrt(2 lambda) x| > 700: past that, big_f over- or underflows.
FundamentalAt fundamental(const Model& m, double x);

/// Inverse of the ratio map: the x with big_f(x) == y. Requires y > 0.
double fundamental_inverse(const Model& m, double y);

/// Value of a stage cost together with both partial derivatives.
struct StageValue {
  double value;
  double dx;
  double dc;
};

/// Cost-to-go once inventory has passed c_hat: the only decision left is
/// when to make the single final fill to 1. Requires c in [c_hat, 1]
/// (with 1e-9 grace below c_hat, matching the boundary-regime snap).
/// Total in x: the exponential piece only arises where its exponent is
/// nonpositive.
StageValue endgame_value(const Model& m, double x, double c);

/// Payoff of committing at (x, c): jump straight to c_hat, then follow the
/// endgame. Requires c in [0, c_hat]. Total in x.
StageValue stop_payoff(const Model& m, double x, double c);

/// Branch selector at the obstacle's curvature kink ordinate y = exp(-2).
enum class KinkSide { lower, upper };

/// Transformed stopping obstacle h(y, c) = stop_payoff(x, c) / phi(x) under
/// y = big_f(x), with the partials the boundary solver consumes.
struct ObstacleAt {
  double y;
  double c;
  double h;
  double h_y;
  double h_c;
  double h_yc;
  double h_yy;
  /// True at y == 0 exactly: h and h_c vanish there, and the slope fields
  /// carry the (infinite) one-sided limits.
  bool origin;
  /// Branch the curvature fields used; only meaningful at the kink ordinate,
  /// where h_yy jumps. h, h_y, h_c, h_yc paste continuously.
  KinkSide side;
};

/// Evaluates the obstacle. Requires y >= 0 finite and c in [0, c_hat].
/// `side` picks the branch when y lands exactly on the kink ordinate.
/// Internally works in t = log y, which keeps h and h_y representable down
/// to y = exp(-700); h_yy saturates to +-inf below roughly y = exp(-472).
ObstacleAt obstacle(const Model& m, double y, double c,
                    KinkSide side = KinkSide::lower);

}  // namespace finfuel
