#include "finfuel/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "finfuel/boundaries.hpp"
#include "finfuel/model.hpp"
#include "finfuel/simulate.hpp"
#include "finfuel/transform.hpp"
#include "finfuel/value.hpp"
#include "finfuel/verify.hpp"

namespace finfuel {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "+inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos)
    s += ".0";
  return s;
}

namespace {

using njson = nlohmann::ordered_json;

struct RunConfig {
  double lambda = 0.5;
  double a = 0.4;
  double c_min = 0.0;
  double c_max = 1.0;
  int n_c = 256;
  double x_min = -3.0;
  double x_max = 3.0;
  int n_x = 121;
  long long n_paths = 100000;
  double dt = 1e-3;
  double horizon = 30.0;
  std::uint64_t seed = 1;
  bool bridge = true;
  std::string out_path;
};

void merge_config_file(RunConfig& rc, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config JSON: ") + e.what());
  }
  try {
    if (j.contains("lambda")) rc.lambda = j.at("lambda").get<double>();
    if (j.contains("a")) rc.a = j.at("a").get<double>();
    if (j.contains("grids")) {
      const auto& g = j.at("grids");
      if (g.contains("c_min")) rc.c_min = g.at("c_min").get<double>();
      if (g.contains("c_max")) rc.c_max = g.at("c_max").get<double>();
      if (g.contains("n_c")) rc.n_c = g.at("n_c").get<int>();
      if (g.contains("x_min")) rc.x_min = g.at("x_min").get<double>();
      if (g.contains("x_max")) rc.x_max = g.at("x_max").get<double>();
      if (g.contains("n_x")) rc.n_x = g.at("n_x").get<int>();
    }
    if (j.contains("mc")) {
      const auto& mc = j.at("mc");
      if (mc.contains("n_paths")) rc.n_paths = mc.at("n_paths").get<long long>();
      if (mc.contains("dt")) rc.dt = mc.at("dt").get<double>();
      if (mc.contains("horizon")) rc.horizon = mc.at("horizon").get<double>();
      if (mc.contains("seed")) rc.seed = mc.at("seed").get<std::uint64_t>();
      if (mc.contains("bridge_correction"))
        rc.bridge = mc.at("bridge_correction").get<bool>();
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      if (o.contains("path")) rc.out_path = o.at("path").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config field: ") + e.what());
  }
}

void validate_grid(const RunConfig& rc) {
  if (rc.n_c < 1 || rc.n_x < 1)
    throw std::invalid_argument("grid sizes must be positive");
  if (!(rc.c_min <= rc.c_max) || !(rc.x_min <= rc.x_max))
    throw std::invalid_argument("grid bounds must be ordered");
}

double grid_at(double lo, double hi, int i, int n) {
  if (n < 2) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

const char* regime_token(Regime r) {
  switch (r) {
    case Regime::SingleUpper: return "SingleUpper";
    case Regime::TwoSided: return "TwoSided";
    case Regime::ConstantLower: return "ConstantLower";
  }
  return "Unknown";
}

PolicySpec parse_policy(const std::string& tok, double delta) {
  if (tok == "optimal") return {Policy::Optimal, 0.0};
  if (tok == "none") return {Policy::NoAction, 0.0};
  if (tok == "full-fill") return {Policy::FullFillNow, 0.0};
  if (tok == "delta") return {Policy::Delta, delta};
  if (tok == "jump-to-target") return {Policy::JumpToChatThenNothing, 0.0};
  if (tok == "reflect-at-beta") return {Policy::ReflectAtBeta, 0.0};
  throw std::invalid_argument("unknown policy: " + tok);
}

void write_output(const RunConfig& rc, const std::string& text) {
  if (rc.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(rc.out_path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output: " + rc.out_path);
  out << text;
  if (!out) throw std::invalid_argument("write failed: " + rc.out_path);
}

int cmd_boundaries(const RunConfig& rc) {
  validate_grid(rc);
  const Model m = Model::quadratic(rc.lambda, rc.a);
  const BoundaryMap map(m);
  std::string s = "c,regime,gamma_hat,beta_hat,y1,y2\n";
  for (int i = 0; i < rc.n_c; ++i) {
    const double c = grid_at(rc.c_min, rc.c_max, i, rc.n_c);
    const Boundaries b = map.at(c);
    s += format_double(c);
    s += ',';
    s += regime_token(b.regime);
    s += ',';
    s += format_double(b.gamma_hat);
    s += ',';
    s += format_double(b.beta_hat);
    s += ',';
    if (b.regime != Regime::SingleUpper && !std::isnan(b.y1))
      s += format_double(b.y1);
    s += ',';
    if (!std::isnan(b.y2)) s += format_double(b.y2);
    s += '\n';
  }
  write_output(rc, s);
  return 0;
}

int cmd_value(const RunConfig& rc) {
  validate_grid(rc);
  const Model m = Model::quadratic(rc.lambda, rc.a);
  const BoundaryMap map(m);
  std::string s = "x,c,W,W_x,W_c,region\n";
  const double chat = m.c_hat();
  for (int j = 0; j < rc.n_c; ++j) {
    const double c = grid_at(rc.c_min, rc.c_max, j, rc.n_c);
    const bool strip = c < chat - kRegimeSnap;
    TangentLine line;
    if (strip) line = tangent_line(map, c);
    for (int i = 0; i < rc.n_x; ++i) {
      const double x = grid_at(rc.x_min, rc.x_max, i, rc.n_x);
      const ValuePoint vp = strip ? value_w(map, line, x) : value_w(map, x, c);
      s += format_double(x);
      s += ',';
      s += format_double(c);
      s += ',';
      s += format_double(vp.w);
      s += ',';
      s += format_double(vp.w_x);
      s += ',';
      s += format_double(vp.w_c);
      s += ',';
      s += region_name(vp.region);
      s += '\n';
    }
  }
  write_output(rc, s);
  return 0;
}

int cmd_verify(const RunConfig& rc, const VerifyOptions& opt) {
  const Model m = Model::quadratic(rc.lambda, rc.a);
  const BoundaryMap map(m);
  const std::vector<CheckResult> checks = run_verification(m, map, opt);
  njson report;
  report["checks"] = njson::array();
  int passed = 0;
  for (const CheckResult& c : checks) {
    njson jc;
    jc["name"] = c.name;
    jc["status"] = c.passed ? "pass" : "fail";
    jc["max_violation"] = c.max_violation;
    jc["tolerance"] = c.tolerance;
    report["checks"].push_back(jc);
    if (c.passed) ++passed;
  }
  const int total = static_cast<int>(checks.size());
  report["summary"] = {{"passed", passed},
                       {"failed", total - passed},
                       {"total", total},
                       {"status", passed == total ? "pass" : "fail"}};
  write_output(rc, report.dump(2) + "\n");
  return passed == total ? 0 : 1;
}

int cmd_simulate(const RunConfig& rc, const std::string& policy_tok,
                 double x, double c, double delta, int threads) {
  const Model m = Model::quadratic(rc.lambda, rc.a);
  const BoundaryMap map(m);
  const PolicySpec spec = parse_policy(policy_tok, delta);
  const McConfig cfg(m, rc.n_paths, rc.dt, rc.horizon, rc.seed, rc.bridge);
  const McEstimate e = mc_cost(m, map, x, c, spec, cfg, threads);
  njson j;
  j["policy"] = policy_name(spec.kind);
  j["x"] = x;
  j["c"] = c;
  j["mean"] = e.mean;
  j["std_error"] = e.std_error;
  j["n_paths"] = e.n_paths;
  j["dt"] = cfg.dt;
  j["horizon"] = cfg.horizon;
  j["seed"] = cfg.seed;
  j["truncated_paths"] = e.truncated_paths;
  write_output(rc, j.dump(2) + "\n");
  return 0;
}

int cmd_geometry(const RunConfig& rc, double c, double y_min, double y_max,
                 int n) {
  if (n < 1) throw std::invalid_argument("grid size must be positive");
  if (!(y_min > 0.0) || !(y_min <= y_max))
    throw std::invalid_argument("y range must satisfy 0 < y_min <= y_max");
  const Model m = Model::quadratic(rc.lambda, rc.a);
  const BoundaryMap map(m);
  const double tlo = std::log(y_min), thi = std::log(y_max);
  std::string s = "y,H,Q\n";
  for (int i = 0; i < n; ++i) {
    const double y = std::exp(grid_at(tlo, thi, i, n));
    const double h = obstacle(m, y, c).h;
    const double q = minorant(map, y, c);
    s += format_double(y);
    s += ',';
    s += format_double(h);
    s += ',';
    s += format_double(q);
    s += '\n';
  }
  write_output(rc, s);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Finite-fuel singular control: boundaries, value surface, "
               "verification, and Monte Carlo policy costs"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string config_path;
  int exit_code = 0;

  // shared flag storage; each subcommand registers the subset it honors
  double lambda = rc.lambda, a = rc.a;
  double c_min = rc.c_min, c_max = rc.c_max;
  double x_min = rc.x_min, x_max = rc.x_max;
  int n_c = rc.n_c, n_x = rc.n_x;
  long long paths = rc.n_paths;
  double dt = rc.dt, horizon = rc.horizon;
  std::uint64_t seed = rc.seed;
  bool bridge = rc.bridge;
  std::string out_path, policy_tok = "none";
  double sim_x = 0.0, sim_c = 0.0, delta = 0.1;
  double geo_c = 0.0;
  double y_min = 1e-4, y_max = 0.0;  // 0: pick the domain default later
  int threads = 0;
  VerifyOptions vopt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--lambda", lambda, "discount rate (positive)");
    sub->add_option("--a", a, "curve parameter in (0,1)");
    sub->add_option("--out", out_path, "output path (default stdout)");
  };

  CLI::App* cb = app.add_subcommand(
      "boundaries", "action-boundary table as CSV: c,regime,gamma_hat,beta_hat,y1,y2");
  add_common(cb);
  cb->add_option("--c-min", c_min, "lowest inventory level");
  cb->add_option("--c-max", c_max, "highest inventory level");
  cb->add_option("--n", n_c, "number of rows");

  CLI::App* cv = app.add_subcommand(
      "value", "value surface as CSV: x,c,W,W_x,W_c,region");
  add_common(cv);
  cv->add_option("--c-min", c_min, "lowest inventory level");
  cv->add_option("--c-max", c_max, "highest inventory level");
  cv->add_option("--n-c", n_c, "inventory grid points");
  cv->add_option("--x-min", x_min, "lowest spot");
  cv->add_option("--x-max", x_max, "highest spot");
  cv->add_option("--n-x", n_x, "spot grid points");

  CLI::App* cf = app.add_subcommand(
      "verify", "run the invariant suite and write a JSON report");
  add_common(cf);
  cf->add_option("--boundary-grid", vopt.boundary_grid,
                 "points in the boundary scans");
  cf->add_option("--hjb-nx", vopt.hjb_nx, "spot points in the PDE scan");
  cf->add_option("--hjb-nc", vopt.hjb_nc, "inventory points in the PDE scan");

  CLI::App* cs = app.add_subcommand(
      "simulate", "Monte Carlo policy cost as JSON");
  add_common(cs);
  cs->add_option("--policy", policy_tok,
                 "optimal|none|full-fill|delta|jump-to-target|reflect-at-beta");
  cs->add_option("--x", sim_x, "starting spot");
  cs->add_option("--c", sim_c, "starting inventory");
  cs->add_option("--delta", delta, "purchase size for the delta policy");
  cs->add_option("--paths", paths, "number of simulated paths");
  cs->add_option("--dt", dt, "time step");
  cs->add_option("--horizon", horizon, "truncation horizon");
  cs->add_option("--seed", seed, "RNG seed");
  cs->add_flag("--bridge,!--no-bridge", bridge,
               "within-step crossing correction");
  cs->add_option("--threads", threads, "worker threads (0 = hardware)");

  CLI::App* cg = app.add_subcommand(
      "geometry", "obstacle and minorant on a log-spaced grid: y,H,Q");
  add_common(cg);
  cg->add_option("--c", geo_c, "inventory level")->required();
  cg->add_option("--y-min", y_min, "lowest ordinate");
  cg->add_option("--y-max", y_max, "highest ordinate");
  int geo_n = 10000;
  cg->add_option("--n", geo_n, "number of rows");

  try {
    app.parse(argc, argv);

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--config")) merge_config_file(rc, config_path);
    auto ov = [&](const char* name, auto& dst, const auto& src) {
      if (sub->count(name)) dst = src;
    };
    ov("--lambda", rc.lambda, lambda);
    ov("--a", rc.a, a);
    ov("--out", rc.out_path, out_path);

    if (sub == cb || sub == cv) {
      ov("--c-min", rc.c_min, c_min);
      ov("--c-max", rc.c_max, c_max);
    }
    if (sub == cb) {
      ov("--n", rc.n_c, n_c);
      exit_code = cmd_boundaries(rc);
    } else if (sub == cv) {
      ov("--n-c", rc.n_c, n_c);
      ov("--x-min", rc.x_min, x_min);
      ov("--x-max", rc.x_max, x_max);
      ov("--n-x", rc.n_x, n_x);
      exit_code = cmd_value(rc);
    } else if (sub == cf) {
      exit_code = cmd_verify(rc, vopt);
    } else if (sub == cs) {
      ov("--paths", rc.n_paths, paths);
      ov("--dt", rc.dt, dt);
      ov("--horizon", rc.horizon, horizon);
      ov("--seed", rc.seed, seed);
      if (sub->count("--bridge") || sub->count("--no-bridge"))
        rc.bridge = bridge;
      exit_code = cmd_simulate(rc, policy_tok, sim_x, sim_c, delta, threads);
    } else if (sub == cg) {
      const double dflt_ymax = std::exp(2.0) * (1.0 - 1e-9);
      const double ymax = sub->count("--y-max") ? y_max : dflt_ymax;
      exit_code = cmd_geometry(rc, geo_c, y_min, ymax, geo_n);
    }
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

}  // namespace finfuel
