// Release gate: twelve numbered checks, one line each, nonzero exit if any
// fails. Tolerances are pinned here on purpose; loosening one is a release
// decision, not a test edit. The Monte Carlo block runs at production size
// and dominates the runtime (a few minutes single-threaded).

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "finfuel/boundaries.hpp"
#include "finfuel/cli.hpp"
#include "finfuel/model.hpp"
#include "finfuel/simulate.hpp"
#include "finfuel/transform.hpp"
#include "finfuel/value.hpp"
#include "finfuel/verify.hpp"

namespace {

using namespace finfuel;
using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass;
  std::string detail;
};

double lerp(double lo, double hi, int i, int n) {
  return n < 2 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
}

// --- 1: closed-form critical levels ---------------------------------------
Outcome check_levels(const Model& m) {
  double e = std::abs(m.c_hat() - 0.7);
  e = std::max(e, std::abs(m.c_o() - 0.4));
  e = std::max(e, std::abs(m.r_hat() - 0.09));
  e = std::max(e, std::abs(m.gamma_o() + 1.0));
  return {e < 1e-12, fmt("max|err|=%.2e (tol 1e-12)", e)};
}

// --- 2: tangency roots and solver-stage agreement --------------------------
Outcome check_roots(const Model& m) {
  const double co = m.c_o();
  const double chat = m.c_hat();
  double pair_res = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double c = lerp(co + 1e-4, chat - 1e-4, i, 50);
    const PairSolution s = solve_pair(m, c);
    pair_res = std::max(pair_res, std::abs(tangent_slope_gap(m, s.t1, s.y2, c)));
    pair_res = std::max(pair_res, std::abs(tangent_level_gap(m, s.t1, s.y2, c)));
  }
  double single_res = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double c = lerp(0.0, co, i, 50);
    single_res = std::max(single_res,
                          std::abs(origin_level_gap(m, solve_single(m, c), c)));
  }
  std::mt19937_64 gen(12345);
  std::uniform_real_distribution<double> draw(co + 1e-4, chat - 1e-4);
  double stage_gap = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double c = draw(gen);
    const PairSolution s1 = solve_pair_bracket(m, c);
    const PairSolution s2 = solve_pair(m, c);
    stage_gap = std::max(stage_gap, std::abs(s1.y1 - s2.y1));
    stage_gap = std::max(stage_gap, std::abs(s1.y2 - s2.y2));
  }
  const bool pass =
      pair_res < 1e-10 && single_res < 1e-12 && stage_gap < 1e-9;
  return {pass, fmt("pair|F|=%.2e (1e-10) single|F|=%.2e (1e-12) "
                    "stages=%.2e (1e-9)",
                    pair_res, single_res, stage_gap)};
}

// --- 3: touch-ordinate shape and limits ------------------------------------
Outcome check_shape(const Model& m, const BoundaryMap& map) {
  const double co = m.c_o();
  const double chat = m.c_hat();
  const double theta = m.sqrt_two_lambda();
  const int n = 256;
  double y1_step = -1.0, prev = -1e300;
  for (int i = 0; i < n; ++i) {
    const double y1 = map.at(lerp(co + 1e-4, chat - 1e-4, i, n)).y1;
    if (i > 0) y1_step = std::max(y1_step, prev - y1);
    prev = y1;
  }
  double y2_step = -1.0, y2_max = 0.0;
  prev = 1e300;
  for (int i = 0; i < n; ++i) {
    const double y2 = map.at(lerp(0.0, chat - 1e-4, i, n)).y2;
    if (i > 0) y2_step = std::max(y2_step, y2 - prev);
    prev = y2;
    y2_max = std::max(y2_max, y2);
  }
  double beta_out = -1e300, gamma_out = -1e300;
  for (int i = 0; i < n; ++i) {
    const Boundaries b = map.at(lerp(1e-3, 1.0 - 1e-3, i, n));
    if (std::isfinite(b.beta_hat))
      beta_out = std::max(beta_out, std::max(-b.beta_hat * theta,
                                             b.beta_hat * theta - 1.0));
    if (std::isfinite(b.gamma_hat))
      gamma_out = std::max(gamma_out, b.gamma_hat * theta + 1.0);
  }
  const double y1_lim = std::abs(map.at(chat - 1e-4).y1 - std::exp(-2.0));
  const double y1_slope = boundary_slopes(m, chat - 1e-4).dy1_dc;
  const bool pass = y1_step < 0.0 && y2_step < 0.0 &&
                    y2_max < std::exp(2.0) && beta_out < 0.0 &&
                    gamma_out <= 1e-12 && y1_lim < 1e-3 && y1_slope < 1e-3;
  return {pass, fmt("mono=%s scaled=%s lim|y1-e^-2|=%.2e (1e-3) "
                    "dy1=%.2e (1e-3)",
                    (y1_step < 0 && y2_step < 0) ? "ok" : "BAD",
                    (beta_out < 0 && gamma_out <= 1e-12 &&
                     y2_max < std::exp(2.0)) ? "ok" : "BAD",
                    y1_lim, y1_slope)};
}

// --- 4: ordinate pasting at c_o --------------------------------------------
Outcome check_pasting(const Model& m, const BoundaryMap& map) {
  const double co = m.c_o();
  const double level =
      std::abs(map.at(co + 1e-6).y2 - map.at(co - 1e-6).y2);
  const BoundarySlopes sl = boundary_slopes(m, co - 1e-6);
  const BoundarySlopes sh = boundary_slopes(m, co + 1e-6);
  const double slope = std::abs(sh.dy2_dc - sl.dy2_dc) /
                       std::max(std::abs(sl.dy2_dc), 1e-30);
  return {level < 1e-4 && slope < 1e-2,
          fmt("level=%.2e (1e-4) slope=%.2e rel (1e-2)", level, slope)};
}

// --- 5: analytic slopes vs central differences -----------------------------
Outcome check_slopes(const Model& m, const BoundaryMap& map) {
  const double co = m.c_o();
  const double chat = m.c_hat();
  const double h = 1e-6;
  double worst = 0.0;
  const auto probe = [&](double c, bool with_y1) {
    const BoundarySlopes s = boundary_slopes(m, c);
    const Boundaries bp = map.at(c + h);
    const Boundaries bm = map.at(c - h);
    const double fd2 = (bp.y2 - bm.y2) / (2.0 * h);
    worst = std::max(worst, std::abs(s.dy2_dc - fd2) /
                                std::max(std::abs(s.dy2_dc), 1e-30));
    if (with_y1) {
      const double fd1 = (bp.y1 - bm.y1) / (2.0 * h);
      worst = std::max(worst, std::abs(s.dy1_dc - fd1) /
                                  std::max(std::abs(s.dy1_dc), 1e-30));
    }
  };
  // Interior sample bands: the two-sided band stops 0.02 short of c_hat,
  // where the ordinate's own conditioning noise exceeds an h=1e-6 quotient.
  for (int i = 0; i < 20; ++i) probe(lerp(1e-2, co - 1e-2, i, 20), false);
  for (int i = 0; i < 20; ++i) probe(lerp(co + 1e-2, chat - 2e-2, i, 20), true);
  return {worst < 1e-4, fmt("max rel err=%.2e (tol 1e-4)", worst)};
}

// --- 6: variational inequality on a 400x200 grid ---------------------------
Outcome check_hjb(const Model& m, const BoundaryMap& map) {
  const double chat = m.c_hat();
  double pde_inaction = 0.0, slack_floor = 0.0;
  double slack_action = 0.0, pde_dir = 0.0;
  const int nx = 400, nc = 200;
  for (int j = 0; j < nc; ++j) {
    const double c = lerp(1e-3, 1.0 - 1e-3, j, nc);
    const Boundaries b = map.at(c);
    const bool strip = c < chat - kRegimeSnap;
    TangentLine line;
    if (strip) line = tangent_line(map, c);
    for (int i = 0; i < nx; ++i) {
      const double x = lerp(-3.0, 3.0, i, nx);
      if (std::isfinite(b.gamma_hat) && std::abs(x - b.gamma_hat) <= 1e-6)
        continue;
      if (std::isfinite(b.beta_hat) && std::abs(x - b.beta_hat) <= 1e-6)
        continue;
      const HjbResidual r =
          strip ? hjb_check(map, line, x) : hjb_check(map, x, c);
      slack_floor = std::max(slack_floor, -r.gradient_slack);
      if (x > b.gamma_hat && x < b.beta_hat) {
        pde_inaction = std::max(pde_inaction, std::abs(r.pde_residual));
      } else {
        slack_action = std::max(slack_action, std::abs(r.gradient_slack));
        pde_dir = std::max(pde_dir, -r.pde_residual);
      }
    }
  }
  const bool pass = pde_inaction < 1e-8 && slack_floor < 1e-8 &&
                    slack_action < 1e-10 && pde_dir < 1e-8;
  return {pass, fmt("pde0=%.2e (1e-8) slack>=-%.2e (1e-8) "
                    "slack0=%.2e (1e-10) dir=%.2e (1e-8)",
                    pde_inaction, slack_floor, slack_action, pde_dir)};
}

// --- 7: mixed-partial fit above c_hat, breakdown below ---------------------
Outcome check_fit(const BoundaryMap& map) {
  double smooth = 0.0;
  for (double c : {0.75, 0.85, 0.95})
    smooth = std::max(smooth, *smooth_fit_probe(map, c, 1e-4).lower_jump);
  const SmoothFitProbe broke = smooth_fit_probe(map, 0.55, 1e-4);
  const bool pass =
      smooth < 1e-5 && *broke.lower_jump > 1e-3 && *broke.upper_jump > 1e-3;
  return {pass, fmt("fit=%.2e (1e-5) break lo=%.2e up=%.2e (>1e-3)",
                    smooth, *broke.lower_jump, *broke.upper_jump)};
}

// --- 8: minorant geometry ---------------------------------------------------
Outcome check_geometry(const Model& m, const BoundaryMap& map) {
  const int n = 10000;
  const double tlo = std::log(1e-4);
  const double thi = std::log(std::exp(2.0) * (1.0 - 1e-9));
  double dominance = -1e300;  //  max Q - min(H, 0); must stay <= 0
  double stop_gap = 0.0;      //  max |Q - H| on the stopping set; exact 0
  double convexity = -1e300;  //  worst midpoint violation
  for (double c : {0.1, 0.3, 0.55, 0.65}) {
    const Boundaries b = map.at(c);
    std::vector<double> y(n), q(n);
    for (int i = 0; i < n; ++i) {
      y[i] = std::exp(lerp(tlo, thi, i, n));
      q[i] = minorant(map, y[i], c);
      const double h = obstacle(m, y[i], c).h;
      dominance = std::max(dominance, q[i] - std::min(h, 0.0));
      const bool inside = b.regime == Regime::TwoSided
                              ? (y[i] > b.y1 && y[i] < b.y2)
                              : (y[i] < b.y2);
      if (!inside) stop_gap = std::max(stop_gap, std::abs(q[i] - h));
    }
    for (int i = 0; i + 2 < n; ++i) {
      const double qm = minorant(map, 0.5 * (y[i] + y[i + 2]), c);
      convexity = std::max(convexity, qm - 0.5 * (q[i] + q[i + 2]));
    }
  }
  const bool pass = dominance <= 0.0 && stop_gap == 0.0 && convexity < 1e-9;
  return {pass, fmt("Q-min(H,0)<=%.1e stop|Q-H|=%.1e (exact) "
                    "midpoint=%.1e (1e-9)",
                    dominance, stop_gap, convexity)};
}

// --- 9: exit-region diagnostics ---------------------------------------------
Outcome check_diagnostics(const Model& m, const BoundaryMap& map) {
  const Boundaries b = map.at(0.55);
  double theta_max = -1e300;
  for (int i = 1; i <= 1000; ++i) {
    const double x = b.gamma_hat +
                     (b.beta_hat - b.gamma_hat) * static_cast<double>(i) / 1001.0;
    theta_max = std::max(theta_max, diagnostics(map, x, 0.55).theta);
  }
  const double end_lo = std::abs(diagnostics(map, b.gamma_hat, 0.55).theta);
  const double end_hi = std::abs(diagnostics(map, b.beta_hat, 0.55).theta);
  double gap_min = 1e300;
  for (int j = 0; j < 50; ++j) {
    const double c = lerp(0.0, m.c_hat() - 1e-3, j, 50);
    for (int i = 0; i < 200; ++i)
      gap_min = std::min(gap_min, diagnostics(map, lerp(-3.0, 3.0, i, 200), c).u_gap);
  }
  const bool pass = theta_max < 0.0 && end_lo < 1e-9 && end_hi < 1e-9 &&
                    gap_min >= -1e-9;
  return {pass, fmt("bridge<=%.1e ends=%.1e (1e-9) u_gap>=%.1e (-1e-9)",
                    theta_max, std::max(end_lo, end_hi), gap_min)};
}

// --- 10: simulated policy optimality ----------------------------------------
Outcome check_optimality(const Model& m, const BoundaryMap& map) {
  const McConfig cfg(m, 200000, 1e-3, 30.0, 1001, true);
  std::string detail;
  bool pass = true;
  for (double c : {0.55, 0.85}) {
    const double w = value_w(map, 0.0, c).w;
    const McEstimate opt = mc_cost(m, map, 0.0, c, {Policy::Optimal}, cfg, 1);
    const double bias = std::abs(opt.mean - w);
    const double budget = std::max(3.0 * opt.std_error, 5e-3);
    pass = pass && bias <= budget;
    double margin = 1e300;
    std::vector<PolicySpec> rivals = {{Policy::NoAction},
                                      {Policy::FullFillNow},
                                      {Policy::Delta, 0.1},
                                      {Policy::JumpToChatThenNothing}};
    if (map.at(c).regime != Regime::ConstantLower)
      rivals.push_back({Policy::ReflectAtBeta});
    for (const PolicySpec& spec : rivals) {
      const McEstimate r = mc_cost(m, map, 0.0, c, spec, cfg, 1);
      margin = std::min(margin, r.mean + 3.0 * (opt.std_error + r.std_error) -
                                    opt.mean);
    }
    pass = pass && margin >= 0.0;
    detail += fmt("%sc=%.2f |bias|=%.1e<=%.1e margin=%.1e", detail.empty() ? "" : "  ",
                  c, bias, budget, margin);
  }
  return {pass, detail};
}

// --- 11: simulator calibration ----------------------------------------------
Outcome check_calibration(const Model& m, const BoundaryMap& map) {
  const McConfig cfg(m, 100000, 1e-3, 30.0, 2026, true);
  const McEstimate none = mc_cost(m, map, 1.0, 0.5, {Policy::NoAction}, cfg, 1);
  const double e_none = std::abs(none.mean - 0.45);
  const LaplaceCheck one = laplace_check(m, 0.0, std::nullopt, 1.0, cfg, 1);
  const double e_disc = std::abs(one.discount.mean - std::exp(-1.0));
  const LaplaceCheck sym = laplace_check(m, 0.0, -1.0, 1.0, cfg, 1);
  const double e_spot = std::abs(sym.discounted_spot->mean);
  const bool pass = e_none <= 3.0 * none.std_error &&
                    e_disc <= 3.0 * one.discount.std_error &&
                    e_spot <= 3.0 * sym.discounted_spot->std_error;
  return {pass,
          fmt("|cost-0.45|=%.1e<=%.1e |disc-e^-1|=%.1e<=%.1e |spot|=%.1e<=%.1e",
              e_none, 3.0 * none.std_error, e_disc,
              3.0 * one.discount.std_error, e_spot,
              3.0 * sym.discounted_spot->std_error)};
}

// --- 12: command-line round trip --------------------------------------------
int run_cli_vec(std::vector<std::string> args) {
  std::vector<const char*> argv;
  argv.push_back("finfuel");
  for (const auto& s : args) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

Outcome check_cli_round_trip() {
  namespace fs = std::filesystem;
  const std::string cfg = (fs::temp_directory_path() / "accept_cfg.json").string();
  const std::string rep = (fs::temp_directory_path() / "accept_verify.json").string();
  const std::string csv = (fs::temp_directory_path() / "accept_bounds.csv").string();
  {
    std::ofstream f(cfg);
    f << "{\"lambda\": 0.5, \"a\": 0.4}\n";
  }
  const int rc_verify = run_cli_vec({"verify", "--config", cfg, "--out", rep});
  const int rc_bounds = run_cli_vec({"boundaries", "--config", cfg, "--n", "11",
                                     "--out", csv});
  std::string table;
  {
    std::ifstream in(csv);
    std::string l;
    while (std::getline(in, l)) table += l + "\n";
  }
  const bool single = table.find("0.0,SingleUpper,-inf,") != std::string::npos;
  const bool two = table.find("0.5,TwoSided,") != std::string::npos;
  const bool constant =
      table.find("0.9,ConstantLower,-1.0,+inf,,") != std::string::npos;
  const bool pass =
      rc_verify == 0 && rc_bounds == 0 && single && two && constant;
  return {pass, fmt("verify rc=%d bounds rc=%d regimes %s/%s/%s", rc_verify,
                    rc_bounds, single ? "ok" : "missing",
                    two ? "ok" : "missing", constant ? "ok" : "missing")};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  const Model m = Model::quadratic(0.5, 0.4);
  const BoundaryMap map(m);

  const auto timed = [](auto&& body) {
    const auto t0 = Clock::now();
    Outcome o = body();
    const double sec = std::chrono::duration<double>(Clock::now() - t0).count();
    return std::pair<Outcome, double>(std::move(o), sec);
  };

  int idx = 0, failures = 0;
  const auto report = [&](const char* name, double budget_s, auto&& body) {
    ++idx;
    Outcome o{false, ""};
    double sec = 0.0;
    try {
      auto [oo, s] = timed(body);
      o = std::move(oo);
      sec = s;
      if (budget_s > 0 && sec >= budget_s) {
        o.pass = false;
        o.detail += fmt("  OVER TIME BUDGET %.0fs", budget_s);
      }
    } catch (const std::exception& e) {
      o = {false, fmt("exception: %s", e.what())};
    }
    if (!o.pass) ++failures;
    std::printf("[%2d/12] %s  %-34s %s  (%.3f s)\n", idx,
                o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), sec);
    return o.pass;
  };

  report("critical inventory levels", 1e-3, [&] { return check_levels(m); });
  report("tangency roots, stage agreement", 5.0, [&] { return check_roots(m); });
  report("ordinate shape and limits", 0, [&] { return check_shape(m, map); });
  report("pasting at the regime switch", 0, [&] { return check_pasting(m, map); });
  report("analytic vs differenced slopes", 0, [&] { return check_slopes(m, map); });
  report("variational inequality sweep", 10.0, [&] { return check_hjb(m, map); });
  report("mixed-partial fit / breakdown", 0, [&] { return check_fit(map); });
  report("minorant geometry", 0, [&] { return check_geometry(m, map); });
  report("exit-region diagnostics", 0, [&] { return check_diagnostics(m, map); });
  report("simulated policy optimality", 300.0,
         [&] { return check_optimality(m, map); });
  report("simulator calibration", 0, [&] { return check_calibration(m, map); });
  report("command-line round trip", 0, [&] { return check_cli_round_trip(); });

  std::printf("acceptance: %d of 12 passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
