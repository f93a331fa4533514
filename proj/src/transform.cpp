#include "finfuel/transform.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace finfuel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double checked_theta_x(const Model& m, double x) {
  if (!std::isfinite(x)) throw std::domain_error("spot must be finite");
  const double tx = m.sqrt_two_lambda() * x;
  if (std::abs(tx) > 700) throw std::domain_error("spot too far out: exp would overflow");
  return tx;
}

void check_stop_inventory(const Model& m, double c) {
  if (!(c >= 0 && c <= m.c_hat()))
    throw std::invalid_argument("inventory must lie in [0, c_hat]");
}

// Signed infinity with f(0) = 0, for one-sided limits at the origin.
double limit_sign(double coef, double sign) {
  if (coef == 0) return 0.0;
  return coef > 0 ? sign * kInf : -sign * kInf;
}

}  // namespace

FundamentalAt fundamental(const Model& m, double x) {
  const double tx = checked_theta_x(m, x);
  return {x, std::exp(-tx), std::exp(tx), std::exp(2 * tx)};
}

double fundamental_inverse(const Model& m, double y) {
  if (!(std::isfinite(y) && y > 0))
    throw std::domain_error("ratio-map ordinate must be positive and finite");
  return std::log(y) / (2 * m.sqrt_two_lambda());
}

StageValue endgame_value(const Model& m, double x, double c) {
  // The 1e-9 tolerance matches the boundary-regime snap: levels that close
  // to c_hat are resolved with this closed form.
  if (!(c >= m.c_hat() - 1e-9 && c <= 1))
    throw std::invalid_argument("endgame requires inventory in [c_hat, 1]");
  if (!std::isfinite(x)) throw std::domain_error("spot must be finite");
  const double r = m.running(c).r;
  if (x <= m.gamma_o()) {
    // Filling is immediate below gamma_o; the cost is linear in the spot.
    return {x * (1 - c), 1 - c, -x};
  }
  // Above gamma_o the exponent is bounded above by 0, so no overflow for
  // any spot.
  const double theta = m.sqrt_two_lambda();
  const double phi_c = m.phi(c).value;
  const double damp = std::exp(-theta * x - 1);  // phi(x) / e, in (0, 1]
  return {-r * damp / theta + x * phi_c,
          r * damp + phi_c,
          -m.r_slope(c) * damp / theta + x * m.phi(c).slope};
}

StageValue stop_payoff(const Model& m, double x, double c) {
  check_stop_inventory(m, c);
  if (!std::isfinite(x)) throw std::domain_error("spot must be finite");
  const double r = m.running(c).r;
  const double rs = m.r_slope(c);
  if (x <= m.gamma_o()) {
    return {x * r, r, x * rs};
  }
  const double theta = m.sqrt_two_lambda();
  const double r_hat = m.r_hat();
  const double damp = std::exp(-theta * x - 1);
  return {-r_hat * damp / theta + x * (r - r_hat),
          r_hat * damp + (r - r_hat),
          x * rs};
}

ObstacleAt obstacle(const Model& m, double y, double c, KinkSide side) {
  check_stop_inventory(m, c);
  if (!(std::isfinite(y) && y >= 0))
    throw std::domain_error("obstacle ordinate must be nonnegative and finite");

  const double theta = m.sqrt_two_lambda();
  const double r = m.running(c).r;
  const double rs = m.r_slope(c);

  if (y == 0) {
    return {y,
            c,
            0.0,
            limit_sign(r, -1.0),
            0.0,
            limit_sign(rs, -1.0),
            limit_sign(r, +1.0),
            true,
            KinkSide::lower};
  }

  const double t = std::log(y);
  const bool lower = t < -2 || (t == -2 && side == KinkSide::lower);
  const double coef = lower ? r : r - m.r_hat();
  const double sqrt_y = std::exp(0.5 * t);
  const double inv_sqrt_y = std::exp(-0.5 * t);
  const double ramp = sqrt_y * t / (2 * theta);            // sqrt(y) log(y) / (2 theta)
  const double ramp_y = inv_sqrt_y * (1 + 0.5 * t) / (2 * theta);

  ObstacleAt out;
  out.y = y;
  out.c = c;
  out.h = coef * ramp + (lower ? 0.0 : -m.r_hat() / (theta * std::exp(1.0)));
  out.h_y = coef * ramp_y;
  out.h_c = rs * ramp;
  out.h_yc = rs * ramp_y;
  // exp(-1.5 t) overflows below t ~ -472; the sign is still right, so let the
  // infinity through but keep 0 * inf out.
  out.h_yy = coef == 0 ? 0.0 : -coef * std::exp(-1.5 * t) * t / (8 * theta);
  out.origin = false;
  out.side = lower ? KinkSide::lower : KinkSide::upper;
  return out;
}

}  // namespace finfuel
