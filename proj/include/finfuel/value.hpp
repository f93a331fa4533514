#pragma once

#include <optional>

#include "finfuel/boundaries.hpp"
#include "finfuel/model.hpp"

namespace finfuel {

/// Where a state sits relative to the action boundaries at its level:
/// ActionLower iff x <= gamma_hat, ActionUpper iff x >= beta_hat.
enum class Region { Inaction, ActionLower, ActionUpper };

const char* region_name(Region r);

/// Value surface and first partials at one state.
struct ValuePoint {
  double x;
  double c;
  double w;
  double w_x;
  double w_c;
  Region region;
};

/// Tangent-line data of the minorant at one level below c_hat, reusable
/// across many x at that level. slope and slope_c are the tangent slope
/// A(c) and its c-derivative; t1 is the log of the lower touch ordinate
/// (-inf in the single-boundary regime, where the line pivots at the
/// origin).
struct TangentLine {
  Boundaries bounds;
  double slope;
  double slope_c;
  double t1;
};

/// Builds the tangent data; requires c in [0, c_hat - snap).
TangentLine tangent_line(const BoundaryMap& map, double c);

/// Which side of the variational inequality is tight at a state.
enum class ActiveConstraint { PDE, Gradient, Both };

/// Pointwise variational-inequality data. pde_residual is
/// (1/2) W_xx - lambda W + lambda x Phi(c) with W_xx taken from the
/// region's analytic piece; gradient_slack is W_c + x. In inaction the
/// residual vanishes and the slack is nonnegative; in the action regions
/// the slack vanishes and the residual is nonnegative. kink flags states
/// within 1e-9 of a boundary, where W_xx is one-sided.
struct HjbResidual {
  double pde_residual;
  double gradient_slack;
  ActiveConstraint active;
  bool kink;
};

/// Finite-difference probes of the mixed partial W_cx across each finite
/// boundary: |W_cx(inside) - W_cx(outside)|, the outside (action) value
/// being the exact -1. Fields are empty where the boundary does not exist.
/// Above c_hat the fit is smooth and lower_jump is tiny; between c_o and
/// c_hat both jumps are strictly positive.
struct SmoothFitProbe {
  std::optional<double> lower_jump;
  std::optional<double> upper_jump;
};

/// Exit-region diagnostics. theta is the two-boundary bridge polynomial in
/// sinh form (NaN when only one boundary is finite); u_gap is the
/// inventory-derivative gap between the strip solution and the stop
/// payoff, from its own expected-discount closed form. u_gap equals the
/// gradient slack of hjb_check, reached by an independent route.
struct Diagnostics {
  double theta;
  double u_gap;
};

/// Concave-side minorant of the obstacle on the ratio-map axis: equals the
/// obstacle outside the touch interval, the common tangent inside.
/// Requires y >= 0 and c in [0, c_hat - snap).
double minorant(const BoundaryMap& map, double y, double c);

/// The same line evaluated from the lower-touch tangent data. Exists only
/// in the two-sided regime; agreement with minorant() is a consistency
/// check, not a second code path callers should prefer.
double minorant_lower_anchor(const BoundaryMap& map, double y, double c);

/// Value surface at any state: pasted from the inaction-strip solution
/// below c_hat and the endgame form above. Total in x; c in [0, 1].
ValuePoint value_w(const BoundaryMap& map, double x, double c);

/// Same, reusing a prebuilt tangent line for its level.
ValuePoint value_w(const BoundaryMap& map, const TangentLine& line, double x);

/// Variational-inequality residuals at a state; c in [0, 1).
HjbResidual hjb_check(const BoundaryMap& map, double x, double c);
HjbResidual hjb_check(const BoundaryMap& map, const TangentLine& line, double x);

/// One-sided second-order difference probes of W_cx at the boundaries of
/// level c. h in (1e-6, 1e-2); c must not be c_hat itself.
SmoothFitProbe smooth_fit_probe(const BoundaryMap& map, double c, double h);

/// Diagnostics at a state; c in [0, c_hat - snap).
Diagnostics diagnostics(const BoundaryMap& map, double x, double c);

/// A constant K valid at level c for the growth bound |W| <= K (1 + |x|),
/// assembled from the slopes and intercepts of the analytic pieces.
double growth_bound(const BoundaryMap& map, double c);

}  // namespace finfuel
