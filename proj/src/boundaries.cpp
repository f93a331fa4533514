#include "finfuel/boundaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace finfuel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Tangent shape factors in t = log y: slope(t) is the tangent-slope shape of
// a branch coefficient 1, level(t) the (negated, scaled) intercept shape.
// slope is increasing and negative on (-inf, -2); level is decreasing on (0, 2).
double slope_shape(double t) { return std::exp(-0.5 * t) * (1 + 0.5 * t); }
double level_shape(double t) { return std::exp(0.5 * t) * (1 - 0.5 * t); }

void check_unit_interval(double c) {
  if (!(c >= 0 && c <= 1)) throw std::invalid_argument("inventory level outside [0, 1]");
}

// Lower touch log-ordinate matching the tangent slope at y2, by bisection on
// the increasing slope shape over (-inf, -2).
double match_lower_ordinate(const Model& m, double y2, double c) {
  const double r = m.running(c).r;
  const double target = slope_shape(std::log(y2)) * (r - m.r_hat()) / r;
  double hi = -2.0;
  double lo = -3.0;
  while (slope_shape(lo) > target) {
    lo = -2 + 2 * (lo + 2);
    if (lo < -1400) throw std::runtime_error("lower tangency ordinate underflows");
  }
  // Width 1e-15, not 1e-12: the quantization here feeds the level gap and
  // would otherwise dominate the stage-two polish distance near c_hat.
  for (int i = 0; i < 300 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (slope_shape(mid) > target ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double tangent_slope_gap(const Model& m, double t1, double y2, double c) {
  const double r = m.running(c).r;
  return slope_shape(t1) * r - slope_shape(std::log(y2)) * (r - m.r_hat());
}

double tangent_level_gap(const Model& m, double t1, double y2, double c) {
  const double r = m.running(c).r;
  return level_shape(t1) * r - level_shape(std::log(y2)) * (r - m.r_hat()) -
         2 * std::exp(-1.0) * m.r_hat();
}

double origin_level_gap(const Model& m, double y2, double c) {
  const double r = m.running(c).r;
  return level_shape(std::log(y2)) - 2 * std::exp(-1.0) * m.r_hat() / (m.r_hat() - r);
}

double solve_single(const Model& m, double c) {
  check_unit_interval(c);
  if (c > m.c_o() + kRegimeSnap)
    throw std::invalid_argument("origin-pivot tangency only applies up to c_o");

  // level_shape(log y) falls from 1 to 0 over (1, e^2), the target lies
  // strictly inside (0, 1), so the bracket is immediate.
  double lo = 1.0;
  double hi = std::exp(2.0);
  for (int i = 0; i < 300 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (origin_level_gap(m, mid, c) > 0 ? lo : hi) = mid;
  }
  double y2 = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double t = std::log(y2);
    const double d = -0.25 * t * std::exp(-0.5 * t);  // d level_shape / dy
    y2 -= origin_level_gap(m, y2, c) / d;
  }
  if (!(std::abs(origin_level_gap(m, y2, c)) < 1e-12))
    throw std::runtime_error("origin tangency solve did not converge");
  return y2;
}

PairSolution solve_pair_bracket(const Model& m, double c) {
  check_unit_interval(c);
  if (!(c > m.c_o() && c < m.c_hat()))
    throw std::invalid_argument("two-sided tangency needs c strictly between c_o and c_hat");

  const double r = m.running(c).r;

  // Toward c_hat the upper obstacle branch flattens and the level equation
  // loses its y2-sensitivity like (r_hat - r)^2; past the cutoff the
  // limiting tangency equation pins y2 far more accurately than the raw
  // system can at double precision.
  if (m.r_hat() - r <= 1e-10) {
    const double ek = std::exp(-2.0);
    const auto limit_gap = [&](double y2) {
      const double t2 = std::log(y2);
      return level_shape(t2) - ek * slope_shape(t2) - 2 * std::exp(-1.0);
    };
    double lo = 1.0;
    double hi = std::exp(2.0) - 1e-9;
    for (int i = 0; i < 300 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (limit_gap(mid) > 0 ? lo : hi) = mid;
    }
    const double y2 = 0.5 * (lo + hi);
    const double t1 = match_lower_ordinate(m, y2, c);
    return {t1, std::exp(t1), y2};
  }

  // The level gap, viewed along the slope-matched curve t1(y2), decreases
  // in y2 and changes sign inside (1, e^2).
  double lo = 1 + 1e-9;
  double hi = std::exp(2.0) - 1e-9;
  const auto matched_level_gap = [&](double y2) {
    return tangent_level_gap(m, match_lower_ordinate(m, y2, c), y2, c);
  };
  if (!(matched_level_gap(lo) > 0) || !(matched_level_gap(hi) < 0))
    throw std::runtime_error("two-sided tangency bracket failed");
  for (int i = 0; i < 300 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (matched_level_gap(mid) > 0 ? lo : hi) = mid;
  }
  const double y2 = 0.5 * (lo + hi);
  const double t1 = match_lower_ordinate(m, y2, c);
  return {t1, std::exp(t1), y2};
}

PairSolution solve_pair(const Model& m, double c) {
  const PairSolution bracket = solve_pair_bracket(m, c);
  const double r = m.running(c).r;
  // The limiting branch has no polish; the bracket is the answer there.
  if (m.r_hat() - r <= 1e-10) return bracket;
  double t1 = bracket.t1;
  double y2 = bracket.y2;

  // Stage two: damped Newton in (t1, y2) with the analytic Jacobian; steps
  // are accepted only when the residual shrinks and stay inside the domain.
  const double rs = r - m.r_hat();
  const double scale = std::max(1.0, std::abs(slope_shape(t1) * r));
  const auto residual = [&](double a, double b) {
    return std::max(std::abs(tangent_slope_gap(m, a, b, c)),
                    std::abs(tangent_level_gap(m, a, b, c)));
  };
  double res = residual(t1, y2);
  for (int iter = 0; iter < 30 && res > 1e-14 * scale; ++iter) {
    const double t2 = std::log(y2);
    const double f1 = tangent_slope_gap(m, t1, y2, c);
    const double f2 = tangent_level_gap(m, t1, y2, c);
    const double j11 = -0.25 * r * t1 * std::exp(-0.5 * t1);
    const double j12 = 0.25 * rs * t2 * std::exp(-1.5 * t2);
    const double j21 = -0.25 * r * t1 * std::exp(0.5 * t1);
    const double j22 = 0.25 * rs * t2 * std::exp(-0.5 * t2);
    const double det = j11 * j22 - j12 * j21;
    if (det == 0 || !std::isfinite(det)) break;
    const double dt1 = (-f1 * j22 + f2 * j12) / det;
    const double dy2 = (-f2 * j11 + f1 * j21) / det;
    bool moved = false;
    for (double s = 1.0; s > 1e-4; s *= 0.5) {
      const double nt1 = t1 + s * dt1;
      const double ny2 = y2 + s * dy2;
      if (!(nt1 < -2 && ny2 > 1 && ny2 < std::exp(2.0))) continue;
      const double nres = residual(nt1, ny2);
      if (nres < res) {
        t1 = nt1;
        y2 = ny2;
        res = nres;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (!(res <= 1e-10 * scale))
    throw std::runtime_error("two-sided tangency solve did not converge");
  return {t1, std::exp(t1), y2};
}

Boundaries solve_boundaries(const Model& m, double c) {
  check_unit_interval(c);
  const double theta2 = 2 * m.sqrt_two_lambda();
  if (c >= m.c_hat() - kRegimeSnap) {
    return {c, Regime::ConstantLower, kNaN, kNaN, m.gamma_o(), kInf};
  }
  if (c <= m.c_o() + kRegimeSnap) {
    const double y2 = solve_single(m, c);
    return {c, Regime::SingleUpper, 0.0, y2, -kInf, std::log(y2) / theta2};
  }
  const PairSolution p = solve_pair(m, c);
  return {c, Regime::TwoSided, p.y1, p.y2, p.t1 / theta2, std::log(p.y2) / theta2};
}

BoundarySlopes boundary_slopes(const Model& m, double c) {
  check_unit_interval(c);
  if (c >= m.c_hat() - kRegimeSnap)
    throw std::invalid_argument("constant regime has no moving touch ordinate");

  const double r = m.running(c).r;
  const double rp = m.r_slope(c);
  const double r_hat = m.r_hat();

  if (c <= m.c_o() + kRegimeSnap) {
    const double y2 = solve_single(m, c);
    const double dy2 = -8 * std::exp(-1.0) * r_hat * rp * std::sqrt(y2) /
                       ((r_hat - r) * (r_hat - r) * std::log(y2));
    return {0.0, dy2};
  }

  const PairSolution p = solve_pair(m, c);
  const double t1 = p.t1;
  const double t2 = std::log(p.y2);
  const double rs = r - r_hat;
  const double j11 = -0.25 * r * t1 * std::exp(-0.5 * t1);
  const double j12 = 0.25 * rs * t2 * std::exp(-1.5 * t2);
  const double j21 = -0.25 * r * t1 * std::exp(0.5 * t1);
  const double j22 = 0.25 * rs * t2 * std::exp(-0.5 * t2);
  const double det = j11 * j22 - j12 * j21;
  const double f1c = rp * (slope_shape(t1) - slope_shape(t2));
  const double f2c = rp * (level_shape(t1) - level_shape(t2));
  const double dt1 = (-f1c * j22 + f2c * j12) / det;
  const double dy2 = (-f2c * j11 + f1c * j21) / det;
  return {p.y1 * dt1, dy2};
}

Boundaries BoundaryMap::at(double c) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(c);
  if (it == cache_.end()) it = cache_.emplace(c, solve_boundaries(model_, c)).first;
  return it->second;
}

std::vector<Boundaries> build_table(const Model& m, double c_lo, double c_hi, int n) {
  if (!(c_lo >= 0 && c_lo <= c_hi && c_hi <= 1))
    throw std::invalid_argument("inventory range must satisfy 0 <= c_lo <= c_hi <= 1");
  if (n < 2 && !(n == 1 && c_lo == c_hi))
    throw std::invalid_argument("table needs at least two rows");
  std::vector<Boundaries> rows;
  rows.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double c = n == 1 ? c_lo : c_lo + (c_hi - c_lo) * i / (n - 1);
    rows.push_back(solve_boundaries(m, c));
  }
  return rows;
}

}  // namespace finfuel
