#pragma once

#include <map>
#include <mutex>
#include <vector>

#include "finfuel/model.hpp"

namespace finfuel {

/// Structure of the action region at one inventory level.
enum class Regime {
  SingleUpper,    // c <= c_o: only the upper boundary is active
  TwoSided,       // c_o < c < c_hat: lower and upper boundaries
  ConstantLower,  // c >= c_hat: single constant boundary at gamma_o
};

/// Action boundaries at inventory c. y1 and y2 are the touch ordinates of
/// the common tangent on the ratio-map axis; gamma_hat and beta_hat are
/// their spot-axis preimages. Sentinels: y1 == 0 / gamma_hat == -inf in
/// SingleUpper, beta_hat == +inf in ConstantLower, where the touch
/// ordinates do not exist and are NaN.
struct Boundaries {
  double c;
  Regime regime;
  double y1;
  double y2;
  double gamma_hat;
  double beta_hat;
};

/// c-derivatives of the touch ordinates.
struct BoundarySlopes {
  double dy1_dc;
  double dy2_dc;
};

/// Inventory levels within this distance of c_o or c_hat are resolved with
/// the adjacent closed-form regime; the interior solver is not asked to
/// separate tangency ordinates it cannot distinguish at double precision.
inline constexpr double kRegimeSnap = 1e-9;

/// Residuals of the two-touch tangency system, written in t1 = log(y1) so
/// the lower ordinate survives y1 -> 0. Both vanish at the solution.
double tangent_slope_gap(const Model& m, double t1, double y2, double c);
double tangent_level_gap(const Model& m, double t1, double y2, double c);

/// Residual of the origin-pivot tangency used when c <= c_o.
double origin_level_gap(const Model& m, double y2, double c);

/// Upper touch ordinate for c in [0, c_o + snap]; bisection plus Newton
/// polish, final |origin_level_gap| < 1e-12.
double solve_single(const Model& m, double c);

struct PairSolution {
  double t1;  // log of the lower touch ordinate
  double y1;
  double y2;
};

/// Stage one of the two-sided solve on its own: nested bracketing bisection
/// (in t1 and y2, widths 1e-15), before any Newton polish. Exposed so
/// release checks can measure how far the polish moves the bracket point.
PairSolution solve_pair_bracket(const Model& m, double c);

/// Both touch ordinates for c strictly between c_o and c_hat. Stage one
/// brackets and bisects (solve_pair_bracket above); stage two is a
/// damped Newton accepting only residual-reducing steps. Final residuals
/// are below 1e-12 relative to the tangency terms, which is an absolute
/// 1e-10 except within ~1e-7 of c_o where the terms themselves blow up.
/// Conditioning caveat: the level equation's y2-sensitivity shrinks like
/// (c_hat - c)^2, so y2 carries an absolute error of roughly
/// 1e-17 / (c_hat - c)^2 near the top of the range; within 1e-5 of c_hat
/// the solver switches to the limiting tangency equation, which is
/// well-conditioned again.
PairSolution solve_pair(const Model& m, double c);

/// Boundaries at any c in [0, 1], dispatching on the regime with the snap
/// rule above.
Boundaries solve_boundaries(const Model& m, double c);

/// Touch-ordinate derivatives for c in [0, c_hat - snap); implicit
/// differentiation of the tangency system through its analytic Jacobian.
/// Throws for c in the constant regime, which has no moving ordinate.
BoundarySlopes boundary_slopes(const Model& m, double c);

/// Memoized boundary lookup keyed by inventory level. Thread-safe; the
/// simulation engine queries the same handful of levels millions of times.
class BoundaryMap {
 public:
  explicit BoundaryMap(Model model) : model_(std::move(model)) {}

  Boundaries at(double c) const;
  double gamma(double c) const { return at(c).gamma_hat; }
  double beta(double c) const { return at(c).beta_hat; }
  const Model& model() const { return model_; }

 private:
  Model model_;
  mutable std::mutex mu_;
  mutable std::map<double, Boundaries> cache_;
};

/// Evenly spaced boundary table over [c_lo, c_hi] with n rows (n >= 2, or
/// n == 1 when the endpoints coincide).
std::vector<Boundaries> build_table(const Model& m, double c_lo, double c_hi, int n);

}  // namespace finfuel
