#include "finfuel/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "finfuel/transform.hpp"
#include "finfuel/value.hpp"

namespace finfuel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CheckResult make_check(std::string name, double violation, double tol) {
  const bool ok = violation <= tol;  // NaN fails
  return CheckResult{std::move(name), ok, violation, tol};
}

double lerp_grid(double lo, double hi, int i, int n) {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

std::vector<CheckResult> run_verification(const Model& m,
                                          const BoundaryMap& map,
                                          const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  const double a = m.a();
  const double chat = m.c_hat();
  const double co = m.c_o();
  const double theta = m.sqrt_two_lambda();

  // critical levels against their closed forms
  {
    double v = std::abs(m.c_hat() - 0.5 * (1.0 + a));
    v = std::max(v, std::abs(m.c_o() - a));
    v = std::max(v, std::abs(m.r_hat() - 0.25 * (1.0 - a) * (1.0 - a)));
    v = std::max(v, std::abs(m.gamma_o() + 1.0 / theta));
    out.push_back(make_check("critical_levels", v, 1e-12));
  }

  // root residuals of the two boundary solvers
  {
    double v = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double c = lerp_grid(co + 1e-4, chat - 1e-4, i, 50);
      const PairSolution sol = solve_pair(m, c);
      v = std::max(v, std::abs(tangent_slope_gap(m, sol.t1, sol.y2, c)));
      v = std::max(v, std::abs(tangent_level_gap(m, sol.t1, sol.y2, c)));
    }
    out.push_back(make_check("pair_root_residuals", v, 1e-10));
  }
  {
    double v = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double c = lerp_grid(0.0, co, i, 50);
      const double y2 = solve_single(m, c);
      v = std::max(v, std::abs(origin_level_gap(m, y2, c)));
    }
    out.push_back(make_check("single_root_residual", v, 1e-12));
  }

  // boundary shape: monotone touch ordinates, limits, scaled-level bounds
  const int n = std::max(opt.boundary_grid, 8);
  {
    double worst = -kInf;
    double prev = -kInf;
    for (int i = 0; i < n; ++i) {
      const double c = lerp_grid(co + 1e-4, chat - 1e-4, i, n);
      const double y1 = map.at(c).y1;
      if (i > 0) worst = std::max(worst, prev - y1);
      prev = y1;
    }
    out.push_back(make_check("y1_strictly_increasing", worst, 0.0));
  }
  {
    double worst = -kInf;
    double prev = kInf;
    double ymax = 0.0;
    for (int i = 0; i < n; ++i) {
      const double c = lerp_grid(0.0, chat - 1e-4, i, n);
      const double y2 = map.at(c).y2;
      if (i > 0) worst = std::max(worst, y2 - prev);
      prev = y2;
      ymax = std::max(ymax, y2);
    }
    out.push_back(make_check("y2_strictly_decreasing", worst, 0.0));
    out.push_back(make_check("y2_below_kink_square",
                             ymax - std::exp(2.0), 0.0));
  }
  {
    const Boundaries b = map.at(chat - 1e-4);
    out.push_back(make_check("y1_limit_at_chat",
                             std::abs(b.y1 - std::exp(-2.0)), 1e-3));
    const BoundarySlopes s = boundary_slopes(m, chat - 1e-4);
    out.push_back(make_check("y1_slope_flat_at_chat", s.dy1_dc, 1e-3));
  }
  {
    double vb = -kInf, vg = -kInf;
    for (int i = 0; i < n; ++i) {
      const double c = lerp_grid(0.0, 1.0, i, n);
      const Boundaries b = map.at(c);
      if (std::isfinite(b.beta_hat))
        vb = std::max(vb, std::max(-b.beta_hat * theta,
                                   b.beta_hat * theta - 1.0));
      if (std::isfinite(b.gamma_hat))
        vg = std::max(vg, b.gamma_hat * theta + 1.0);
    }
    out.push_back(make_check("beta_scaled_inside_unit", vb, 0.0));
    out.push_back(make_check("gamma_scaled_at_most_minus_one", vg, 1e-12));
  }

  // continuous pasting of the upper ordinate and its slope at c_o
  {
    const double lo = map.at(co - 1e-6).y2;
    const double hi = map.at(co + 1e-6).y2;
    out.push_back(make_check("y2_pasting_level", std::abs(hi - lo), 1e-4));
    const BoundarySlopes sl = boundary_slopes(m, co - 1e-6);
    const BoundarySlopes sh = boundary_slopes(m, co + 1e-6);
    const double rel = std::abs(sh.dy2_dc - sl.dy2_dc) /
                       std::max(std::abs(sl.dy2_dc), 1e-30);
    out.push_back(make_check("y2_pasting_slope", rel, 1e-2));
  }

  // analytic ordinate derivatives against central differences
  {
    const double h = 1e-6;
    double v = 0.0;
    auto fd_check = [&](double c, bool with_y1) {
      const BoundarySlopes s = boundary_slopes(m, c);
      const Boundaries bp = map.at(c + h);
      const Boundaries bm = map.at(c - h);
      const double fd2 = (bp.y2 - bm.y2) / (2.0 * h);
      v = std::max(v, std::abs(s.dy2_dc - fd2) /
                          std::max(std::abs(s.dy2_dc), 1e-30));
      if (with_y1) {
        const double fd1 = (bp.y1 - bm.y1) / (2.0 * h);
        v = std::max(v, std::abs(s.dy1_dc - fd1) /
                            std::max(std::abs(s.dy1_dc), 1e-30));
      }
    };
    // keep clear of the tangency collapse at chat, where the ordinate's own
    // root-conditioning noise (not the analytic slope) dominates an h=1e-6
    // difference quotient
    for (int i = 0; i < 20; ++i)
      fd_check(lerp_grid(1e-2, co - 1e-2, i, 20), false);
    for (int i = 0; i < 20; ++i)
      fd_check(lerp_grid(co + 1e-2, chat - 2e-2, i, 20), true);
    out.push_back(make_check("boundary_derivative_consistency", v, 1e-4));
  }

  // variational inequality on a grid clear of the boundary tubes
  {
    double pde_inaction = 0.0;
    double slack_floor = 0.0;
    double slack_action = 0.0;
    double pde_action_dir = 0.0;
    const int nx = std::max(opt.hjb_nx, 8);
    const int nc = std::max(opt.hjb_nc, 8);
    for (int j = 0; j < nc; ++j) {
      const double c = lerp_grid(1e-3, 1.0 - 1e-3, j, nc);
      const Boundaries b = map.at(c);
      const bool strip = c < chat - kRegimeSnap;
      TangentLine line;
      if (strip) line = tangent_line(map, c);
      for (int i = 0; i < nx; ++i) {
        const double x = lerp_grid(-3.0, 3.0, i, nx);
        if (std::isfinite(b.gamma_hat) && std::abs(x - b.gamma_hat) <= 1e-6)
          continue;
        if (std::isfinite(b.beta_hat) && std::abs(x - b.beta_hat) <= 1e-6)
          continue;
        const HjbResidual r =
            strip ? hjb_check(map, line, x) : hjb_check(map, x, c);
        slack_floor = std::max(slack_floor, -r.gradient_slack);
        const bool inaction = x > b.gamma_hat && x < b.beta_hat;
        if (inaction) {
          pde_inaction = std::max(pde_inaction, std::abs(r.pde_residual));
        } else {
          slack_action = std::max(slack_action, std::abs(r.gradient_slack));
          pde_action_dir = std::max(pde_action_dir, -r.pde_residual);
        }
      }
    }
    out.push_back(make_check("hjb_pde_zero_in_inaction", pde_inaction, 1e-8));
    out.push_back(make_check("hjb_slack_nonnegative", slack_floor, 1e-8));
    out.push_back(make_check("hjb_slack_zero_in_action", slack_action, 1e-10));
    out.push_back(
        make_check("hjb_pde_direction_in_action", pde_action_dir, 1e-8));
  }

  // mixed-partial fit above chat is smooth; below chat it must break
  {
    double v = 0.0;
    for (double c : {0.75, 0.85, 0.95}) {
      const SmoothFitProbe p = smooth_fit_probe(map, c, 1e-4);
      if (p.lower_jump) v = std::max(v, *p.lower_jump);
    }
    out.push_back(make_check("smooth_fit_above_chat", v, 1e-5));
    const SmoothFitProbe p = smooth_fit_probe(map, 0.55, 1e-4);
    const double jump_floor =
        std::min(p.lower_jump.value_or(0.0), p.upper_jump.value_or(0.0));
    out.push_back(
        make_check("fit_breaks_between_co_and_chat", 1e-3 - jump_floor, 0.0));
  }

  // exit-region diagnostics at a two-boundary level and across the strip
  {
    const double c = 0.55;
    const Boundaries b = map.at(c);
    double vin = -kInf;
    for (int i = 1; i <= 1000; ++i) {
      const double x =
          b.gamma_hat + (b.beta_hat - b.gamma_hat) * i / 1001.0;
      vin = std::max(vin, diagnostics(map, x, c).theta);
    }
    out.push_back(make_check("bridge_negative_between_boundaries", vin, 0.0));
    const double vend =
        std::max(std::abs(diagnostics(map, b.gamma_hat, c).theta),
                 std::abs(diagnostics(map, b.beta_hat, c).theta));
    out.push_back(make_check("bridge_zero_at_boundaries", vend, 1e-9));
  }
  {
    double v = -kInf;
    for (int j = 0; j < 50; ++j) {
      const double c = lerp_grid(0.0, chat - 1e-3, j, 50);
      for (int i = 0; i < 200; ++i) {
        const double x = lerp_grid(-3.0, 3.0, i, 200);
        v = std::max(v, -diagnostics(map, x, c).u_gap);
      }
    }
    out.push_back(make_check("inventory_gap_nonnegative", v, 1e-9));
  }

  return out;
}

}  // namespace finfuel
