#include "finfuel/value.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "finfuel/transform.hpp"

namespace finfuel {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kKinkTol = 1e-9;

void check_spot(double x) {
  if (!std::isfinite(x)) throw std::domain_error("spot must be finite");
}

// Value, first partials, and the region's analytic second x-derivative.
struct Eval {
  ValuePoint vp;
  double w_xx;
};

// Endgame piece, c >= c_hat (minus snap).
Eval eval_endgame(const Model& m, double x, double c) {
  const auto v = endgame_value(m, x, c);
  if (x <= m.gamma_o()) {
    return {{x, c, v.value, v.dx, v.dc, Region::ActionLower}, 0.0};
  }
  const double theta = m.sqrt_two_lambda();
  const double w_xx = -m.running(c).r * theta * std::exp(-theta * x - 1);
  return {{x, c, v.value, v.dx, v.dc, Region::Inaction}, w_xx};
}

// Pasted piece below c_hat, driven by the tangent line of the level.
Eval eval_strip(const Model& m, const TangentLine& line, double x) {
  const Boundaries& b = line.bounds;
  const double c = b.c;
  const double theta = m.sqrt_two_lambda();
  const auto pv = m.phi(c);

  if (x <= b.gamma_hat) {
    return {{x, c, x * (1 - c), 1 - c, -x, Region::ActionLower}, 0.0};
  }
  if (x >= b.beta_hat) {
    const double r = m.running(c).r;
    const double r_hat = m.r_hat();
    const double damp = std::exp(-theta * x - 1);
    return {{x, c,
             x * pv.value + (-r_hat * damp / theta + x * (r - r_hat)),
             pv.value + (r_hat * damp + (r - r_hat)),
             x * pv.slope + x * m.r_slope(c),
             Region::ActionUpper},
            -r_hat * theta * damp};
  }

  const double tx = theta * x;
  const double psi = std::exp(tx);
  const double rp = m.r_slope(c);
  if (b.regime == Regime::SingleUpper) {
    return {{x, c,
             x * pv.value + line.slope * psi,
             pv.value + theta * line.slope * psi,
             x * pv.slope + line.slope_c * psi,
             Region::Inaction},
            theta * theta * line.slope * psi};
  }
  // Two-sided strip. The decreasing-mode coefficient and the c-derivative
  // are kept anchored at the lower touch ordinate in log form: the plain
  // intercept difference cancels catastrophically as y1 -> 0, while these
  // exponents stay nonpositive throughout the strip.
  const double r = m.running(c).r;
  const double t1 = line.t1;
  const double bterm = -(r / (2 * theta)) * (1 - 0.5 * t1) * std::exp(0.5 * t1 - tx);
  const double w_c = x * pv.slope + line.slope_c * (psi - std::exp(t1 - tx)) +
                     rp * (t1 / (2 * theta)) * std::exp(0.5 * t1 - tx);
  return {{x, c,
           x * pv.value + line.slope * psi + bterm,
           pv.value + theta * (line.slope * psi - bterm),
           w_c,
           Region::Inaction},
          theta * theta * (line.slope * psi + bterm)};
}

Eval eval_point(const BoundaryMap& map, const TangentLine& line, double x) {
  return eval_strip(map.model(), line, x);
}

bool near_boundary(const Boundaries& b, double x) {
  return (std::isfinite(b.gamma_hat) && std::abs(x - b.gamma_hat) < kKinkTol) ||
         (std::isfinite(b.beta_hat) && std::abs(x - b.beta_hat) < kKinkTol);
}

HjbResidual residual_from(const Model& m, const Eval& e, bool kink) {
  const double lambda = m.lambda();
  const double pde = 0.5 * e.w_xx - lambda * e.vp.w +
                     lambda * e.vp.x * m.phi(e.vp.c).value;
  const double slack = e.vp.w_c + e.vp.x;
  const ActiveConstraint active =
      kink ? ActiveConstraint::Both
           : (e.vp.region == Region::Inaction ? ActiveConstraint::PDE
                                              : ActiveConstraint::Gradient);
  return {pde, slack, active, kink};
}

}  // namespace

const char* region_name(Region r) {
  switch (r) {
    case Region::Inaction: return "Inaction";
    case Region::ActionLower: return "ActionLower";
    case Region::ActionUpper: return "ActionUpper";
  }
  return "?";
}

TangentLine tangent_line(const BoundaryMap& map, double c) {
  const Model& m = map.model();
  if (!(c >= 0 && c < m.c_hat() - kRegimeSnap))
    throw std::invalid_argument("tangent line needs a level below c_hat");
  TangentLine line;
  line.bounds = map.at(c);
  const auto ob2 = obstacle(m, line.bounds.y2, c);
  const auto sl = boundary_slopes(m, c);
  line.slope = ob2.h_y;
  line.slope_c = ob2.h_yy * sl.dy2_dc + ob2.h_yc;
  line.t1 = line.bounds.regime == Regime::TwoSided
                ? 2 * m.sqrt_two_lambda() * line.bounds.gamma_hat
                : -std::numeric_limits<double>::infinity();
  return line;
}

double minorant(const BoundaryMap& map, double y, double c) {
  const Model& m = map.model();
  if (!(std::isfinite(y) && y >= 0))
    throw std::domain_error("ordinate must be nonnegative and finite");
  const TangentLine line = tangent_line(map, c);
  const Boundaries& b = line.bounds;
  const bool inside =
      b.regime == Regime::TwoSided ? (y > b.y1 && y < b.y2) : (y < b.y2);
  if (!inside) return obstacle(m, y, c).h;
  if (b.regime == Regime::SingleUpper) return line.slope * y;
  const double r = m.running(c).r;
  const double intercept = -(r / (2 * m.sqrt_two_lambda())) *
                           std::exp(0.5 * line.t1) * (1 - 0.5 * line.t1);
  return line.slope * y + intercept;
}

double minorant_lower_anchor(const BoundaryMap& map, double y, double c) {
  const Model& m = map.model();
  if (!(std::isfinite(y) && y >= 0))
    throw std::domain_error("ordinate must be nonnegative and finite");
  const Boundaries b = map.at(c);
  if (b.regime != Regime::TwoSided)
    throw std::invalid_argument("lower-anchored form needs the two-sided regime");
  const auto ob1 = obstacle(m, b.y1, c);
  return ob1.h + ob1.h_y * (y - b.y1);
}

ValuePoint value_w(const BoundaryMap& map, double x, double c) {
  const Model& m = map.model();
  check_spot(x);
  if (!(c >= 0 && c <= 1)) throw std::invalid_argument("inventory level outside [0, 1]");
  if (c >= m.c_hat() - kRegimeSnap) return eval_endgame(m, x, c).vp;
  return eval_point(map, tangent_line(map, c), x).vp;
}

ValuePoint value_w(const BoundaryMap& map, const TangentLine& line, double x) {
  check_spot(x);
  return eval_point(map, line, x).vp;
}

HjbResidual hjb_check(const BoundaryMap& map, double x, double c) {
  const Model& m = map.model();
  check_spot(x);
  if (!(c >= 0 && c < 1))
    throw std::invalid_argument("variational inequality needs c in [0, 1)");
  if (c >= m.c_hat() - kRegimeSnap) {
    const bool kink = std::abs(x - m.gamma_o()) < kKinkTol;
    return residual_from(m, eval_endgame(m, x, c), kink);
  }
  const TangentLine line = tangent_line(map, c);
  return hjb_check(map, line, x);
}

HjbResidual hjb_check(const BoundaryMap& map, const TangentLine& line, double x) {
  check_spot(x);
  const Eval e = eval_point(map, line, x);
  return residual_from(map.model(), e, near_boundary(line.bounds, x));
}

SmoothFitProbe smooth_fit_probe(const BoundaryMap& map, double c, double h) {
  const Model& m = map.model();
  if (!(h > 1e-6 && h < 1e-2)) throw std::invalid_argument("step outside (1e-6, 1e-2)");
  if (!(c >= 0 && c <= 1) || c == m.c_hat())
    throw std::invalid_argument("probe level must lie in [0, 1] away from c_hat");

  // Second-order one-sided difference of W_c in x, stepping into the strip;
  // the action side has W_c = -x, so its mixed partial is the exact -1.
  const auto inside_right = [&](double x0) {
    return (-3 * value_w(map, x0, c).w_c + 4 * value_w(map, x0 + h, c).w_c -
            value_w(map, x0 + 2 * h, c).w_c) /
           (2 * h);
  };
  const auto inside_left = [&](double x0) {
    return (-3 * value_w(map, x0, c).w_c + 4 * value_w(map, x0 - h, c).w_c -
            value_w(map, x0 - 2 * h, c).w_c) /
           (-2 * h);
  };

  SmoothFitProbe out;
  if (c >= m.c_hat() - kRegimeSnap) {
    out.lower_jump = std::abs(inside_right(m.gamma_o()) - (-1.0));
    return out;
  }
  const Boundaries b = map.at(c);
  if (b.regime == Regime::TwoSided) {
    if (b.beta_hat - b.gamma_hat <= 4 * h)
      throw std::invalid_argument("step too wide for the inaction strip");
    out.lower_jump = std::abs(inside_right(b.gamma_hat) - (-1.0));
  }
  out.upper_jump = std::abs(inside_left(b.beta_hat) - (-1.0));
  return out;
}

Diagnostics diagnostics(const BoundaryMap& map, double x, double c) {
  const Model& m = map.model();
  check_spot(x);
  if (!(c >= 0 && c < m.c_hat() - kRegimeSnap))
    throw std::invalid_argument("diagnostics need a level below c_hat");
  const Boundaries b = map.at(c);
  const double theta = m.sqrt_two_lambda();
  const double kfac = 1 + m.phi(c).slope;  // negative below c_hat

  Diagnostics out{kNaN, 0.0};
  if (b.regime == Regime::TwoSided) {
    const double span = theta * (b.beta_hat - b.gamma_hat);
    if (span > 700) throw std::domain_error("boundary span too wide for sinh");
    const double denom = std::sinh(span);
    out.theta = x * denom - b.gamma_hat * std::sinh(theta * (b.beta_hat - x)) -
                b.beta_hat * std::sinh(theta * (x - b.gamma_hat));
    if (x > b.gamma_hat && x < b.beta_hat) out.u_gap = kfac * out.theta / denom;
  } else if (x < b.beta_hat) {
    out.u_gap = kfac * (x - b.beta_hat * std::exp(theta * (x - b.beta_hat)));
  }
  return out;
}

double growth_bound(const BoundaryMap& map, double c) {
  const Model& m = map.model();
  if (!(c >= 0 && c <= 1)) throw std::invalid_argument("inventory level outside [0, 1]");
  const double theta = m.sqrt_two_lambda();
  const double phi = m.phi(c).value;
  const double r = m.running(c).r;
  if (c >= m.c_hat() - kRegimeSnap)
    return std::max(1 - c, phi) + std::max(r, 0.0) / theta;

  const TangentLine line = tangent_line(map, c);
  double k = std::max(1 - c, phi + std::abs(r - m.r_hat())) + m.r_hat() / theta;
  k += std::abs(line.slope) * std::sqrt(line.bounds.y2);
  if (line.bounds.regime == Regime::TwoSided)
    k += std::abs(r / (2 * theta)) * (1 + 0.5 * std::abs(line.t1));
  return k;
}

}  // namespace finfuel
