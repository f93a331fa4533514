#include "finfuel/simulate.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <limits>
#include <stdexcept>
#include <thread>

namespace finfuel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double half_gauss(double x) { return std::exp(-0.5 * x * x); }

double gauss_tail_area(double r) {
  return std::sqrt(M_PI / 2.0) * std::erfc(r / std::sqrt(2.0));
}

// Closure defect of the equal-area layer recursion for tail split r: zero
// when the 255th layer tops out exactly at the mode. Positive means r is too
// small (layers too fat), so the defect is decreasing in r.
double closure_defect(double r, double* edges) {
  const double v = r * half_gauss(r) + gauss_tail_area(r);
  double e = r;
  double fe = half_gauss(r);
  if (edges) edges[0] = r;
  for (int i = 1; i <= 254; ++i) {
    const double fn = fe + v / e;
    if (fn >= 1.0) return static_cast<double>(255 - i) + fn - 1.0;
    e = std::sqrt(-2.0 * std::log(fn));
    fe = fn;
    if (edges) edges[i] = e;
  }
  return fe + v / e - 1.0;
}

}  // namespace

ZigguratNormal::ZigguratNormal() {
  double lo = 3.0, hi = 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (closure_defect(mid, nullptr) > 0.0 ? lo : hi) = mid;
  }
  r_ = 0.5 * (lo + hi);
  v_ = r_ * half_gauss(r_) + gauss_tail_area(r_);

  double edges[255];
  closure_defect(r_, edges);
  x_[0] = v_ / half_gauss(r_);
  for (int i = 0; i < 255; ++i) x_[i + 1] = edges[i];
  x_[256] = 0.0;
  for (int i = 1; i <= 256; ++i) f_[i] = half_gauss(x_[i]);
  f_[0] = f_[1];
  for (int i = 0; i < 256; ++i) ratio_[i] = x_[i + 1] / x_[i];
}

const ZigguratNormal& ZigguratNormal::instance() {
  static const ZigguratNormal z;
  return z;
}

Xoshiro256pp pair_stream(std::uint64_t seed, std::uint64_t pair_index) {
  return Xoshiro256pp(seed, pair_index, 1);
}

Xoshiro256pp bridge_stream(std::uint64_t seed, std::uint64_t path_index) {
  return Xoshiro256pp(seed, path_index, 2);
}

McConfig::McConfig(const Model& m, long long n_paths_, double dt_,
                   double horizon_, std::uint64_t seed_, bool bridge_)
    : n_paths(n_paths_),
      dt(dt_),
      horizon(horizon_),
      seed(seed_),
      bridge_correction(bridge_) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be positive");
  if (!(dt > 0.0) || dt > 1e-2)
    throw std::invalid_argument("dt must lie in (0, 1e-2]");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("horizon must be positive and finite");
  if (!(std::exp(-m.lambda() * horizon) < 1e-6))
    throw std::invalid_argument(
        "horizon too short: the discount at the horizon must fall below 1e-6");
  if (horizon / dt > 2e7)
    throw std::invalid_argument("horizon/dt exceeds the supported step count");
}

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::Optimal: return "optimal";
    case Policy::NoAction: return "none";
    case Policy::FullFillNow: return "full-fill";
    case Policy::Delta: return "delta";
    case Policy::JumpToChatThenNothing: return "jump-to-target";
    case Policy::ReflectAtBeta: return "reflect-at-beta";
  }
  return "unknown";
}

namespace {

// Shared time grid: exact per-node discounts and their backward partial sums.
// tailsum[k] prices a unit of left-rectangle running cost accrued from node k
// to the horizon, which lets constant-inventory stretches be folded into one
// weight per increment.
struct Grid {
  int n;
  double dt;
  double sdt;
  double lamdt;
  double t_end;
  std::vector<double> disc;
  std::vector<double> tailsum;
};

Grid make_grid(double lambda, double dt, long long n_steps) {
  Grid g;
  g.n = static_cast<int>(n_steps);
  g.dt = dt;
  g.sdt = std::sqrt(dt);
  g.lamdt = lambda * dt;
  g.t_end = dt * static_cast<double>(n_steps);
  g.disc.resize(static_cast<size_t>(n_steps) + 1);
  for (long long i = 0; i <= n_steps; ++i)
    g.disc[static_cast<size_t>(i)] = std::exp(-lambda * dt * static_cast<double>(i));
  g.tailsum.assign(static_cast<size_t>(n_steps) + 1, 0.0);
  for (long long k = n_steps - 1; k >= 0; --k)
    g.tailsum[static_cast<size_t>(k)] =
        g.tailsum[static_cast<size_t>(k) + 1] + g.disc[static_cast<size_t>(k)];
  return g;
}

long long grid_steps(const McConfig& cfg) {
  const long long n = std::llround(cfg.horizon / cfg.dt);
  return n < 1 ? 1 : n;
}

void check_cfg(const Model& m, const McConfig& cfg) {
  if (!(std::exp(-m.lambda() * cfg.horizon) < 1e-6))
    throw std::invalid_argument("config horizon is too short for this model");
}

// --- deterministic pair driver ---------------------------------------------
// Paths 2p and 2p+1 form an antithetic pair evaluated together; blocks of
// pairs are reduced in index order, so the estimate is a pure function of the
// inputs no matter how many threads run the blocks.

template <int K>
struct PairVals {
  std::array<double, K> a{};
  std::array<double, K> b{};
  long long trunc = 0;
};

template <int K>
struct Accum {
  std::array<double, K> sum{};
  std::array<double, K> sumsq{};
  long long trunc = 0;
};

template <int K>
struct RunStats {
  std::array<double, K> mean{};
  std::array<double, K> se{};
  long long trunc = 0;
};

constexpr long long kPairsPerBlock = 256;

template <int K, class Scratch, class PairFn>
RunStats<K> run_pairs(long long n_paths, int n_threads, PairFn&& per_pair) {
  const long long n_pairs = (n_paths + 1) / 2;
  const long long n_blocks = (n_pairs + kPairsPerBlock - 1) / kPairsPerBlock;
  std::vector<Accum<K>> partials(static_cast<size_t>(n_blocks));

  auto run_block = [&](long long blk, Scratch& sc) {
    Accum<K> acc;
    const long long p0 = blk * kPairsPerBlock;
    const long long p1 = std::min(n_pairs, p0 + kPairsPerBlock);
    for (long long p = p0; p < p1; ++p) {
      const bool want_b = 2 * p + 1 < n_paths;
      const PairVals<K> v = per_pair(p, want_b, sc);
      for (int k = 0; k < K; ++k) {
        acc.sum[k] += v.a[k];
        acc.sumsq[k] += v.a[k] * v.a[k];
        if (want_b) {
          acc.sum[k] += v.b[k];
          acc.sumsq[k] += v.b[k] * v.b[k];
        }
      }
      acc.trunc += v.trunc;
    }
    partials[static_cast<size_t>(blk)] = acc;
  };

  int threads = n_threads;
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = static_cast<int>(std::min<long long>(threads, n_blocks));
  if (threads <= 1) {
    Scratch sc;
    for (long long blk = 0; blk < n_blocks; ++blk) run_block(blk, sc);
  } else {
    std::atomic<long long> next{0};
    auto worker = [&] {
      Scratch sc;
      for (;;) {
        const long long blk = next.fetch_add(1);
        if (blk >= n_blocks) return;
        run_block(blk, sc);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RunStats<K> out;
  std::array<double, K> sum{}, sumsq{};
  long long trunc = 0;
  for (const auto& pa : partials) {
    for (int k = 0; k < K; ++k) {
      sum[k] += pa.sum[k];
      sumsq[k] += pa.sumsq[k];
    }
    trunc += pa.trunc;
  }
  const double n = static_cast<double>(n_paths);
  for (int k = 0; k < K; ++k) {
    const double mean = sum[k] / n;
    double var = 0.0;
    if (n_paths > 1) {
      var = (sumsq[k] - n * mean * mean) / (n - 1.0);
      if (var < 0.0) var = 0.0;
    }
    out.mean[k] = mean;
    out.se[k] = std::sqrt(var / n);
  }
  out.trunc = trunc;
  return out;
}

struct NoScratch {};

struct PathScratch {
  std::vector<double> g;
  int filled = 0;
};

// --- constant-inventory policies -------------------------------------------
// With the inventory frozen after a (possibly empty) time-zero purchase, the
// discounted cost is affine in the increments, so each one carries a single
// precomputed weight and the antithetic twin is the exact mirror around the
// deterministic part.

McEstimate run_linear(const Model& m, double x, double c_eff, double jump0,
                      const McConfig& cfg, const Grid& g, int n_threads) {
  const double phi = m.phi(c_eff).value;
  const double krun = g.lamdt * phi;
  const double ktail = g.disc[static_cast<size_t>(g.n)] * phi;
  const double base = jump0 + x * (krun * g.tailsum[0] + ktail);
  if (phi == 0.0) return McEstimate{base, 0.0, cfg.n_paths, cfg, 0};

  std::vector<double> wv(static_cast<size_t>(g.n));
  for (int j = 0; j < g.n; ++j)
    wv[static_cast<size_t>(j)] =
        g.sdt * (krun * g.tailsum[static_cast<size_t>(j) + 1] + ktail);

  const ZigguratNormal& zig = ZigguratNormal::instance();
  const double* w = wv.data();
  const int n2 = g.n & ~1;
  auto per_pair = [&](long long p, bool, NoScratch&) {
    Xoshiro256pp rng = pair_stream(cfg.seed, static_cast<std::uint64_t>(p));
    double acc0 = 0.0, acc1 = 0.0;
    int j = 0;
    for (; j < n2; j += 2) {
      acc0 = std::fma(w[j], zig.sample(rng), acc0);
      acc1 = std::fma(w[j + 1], zig.sample(rng), acc1);
    }
    if (j < g.n) acc0 = std::fma(w[j], zig.sample(rng), acc0);
    const double acc = acc0 + acc1;
    PairVals<1> v;
    v.a[0] = base + acc;
    v.b[0] = base - acc;
    return v;
  };
  const RunStats<1> st =
      run_pairs<1, NoScratch>(cfg.n_paths, n_threads, per_pair);
  return McEstimate{st.mean[0], st.se[0], cfg.n_paths, cfg, st.trunc};
}

// --- the optimal two-stage policy -------------------------------------------

struct OptCtx {
  double lo1;      // first-stage lower level, -inf when absent
  double up1;      // first-stage upper level, +inf when absent
  double gamma_o;  // second-stage lower level
  double phi0;
  double phimid;
  double fill1;     // 1 - c, the one-shot lower fill
  double mid_jump;  // c_hat - c, the upper partial fill
  double fill2;     // 1 - c_hat
  bool done;        // c == 1: no fuel, no cost
};

OptCtx make_opt_ctx(const Model& m, const BoundaryMap& map, double c) {
  OptCtx ctx;
  ctx.done = c >= 1.0 - 1e-12;
  const Boundaries b = map.at(ctx.done ? 1.0 : c);
  ctx.lo1 = b.gamma_hat;
  ctx.up1 = b.beta_hat;
  ctx.gamma_o = m.gamma_o();
  ctx.phi0 = m.phi(c).value;
  ctx.phimid = m.phi(m.c_hat()).value;
  ctx.fill1 = 1.0 - c;
  ctx.mid_jump = m.c_hat() - c;
  ctx.fill2 = 1.0 - m.c_hat();
  return ctx;
}

struct JumpRec {
  double time;
  double size;
};

struct LegOut {
  double cost = 0.0;
  std::optional<double> tau;
  HitSide side = HitSide::None;
  bool truncated = false;
  int n_jumps = 0;
  JumpRec jumps[2];
};

// One path of the optimal policy. inc(i) returns the i-th Brownian step; uni,
// when non-null, feeds the within-step crossing tests. Running cost is
// left-rectangle; jumps book at the first grid node past the crossing and
// price at the boundary level (at the spot itself for time-zero and forced
// fills, where no crossing pinned the level).
template <class Inc, class Uni>
LegOut optimal_leg(const OptCtx& ctx, const Grid& g, double x, Inc&& inc,
                   Uni* uni) {
  LegOut out;
  if (ctx.done) return out;

  double lo = ctx.lo1, up = ctx.up1;
  bool mid_phase = false;
  double racc1 = 0.0, racc2 = 0.0;
  double X = x;

  auto book = [&](double t, double size, double price, double w) {
    out.cost += w * price * size;
    out.jumps[out.n_jumps++] = {t, size};
  };

  if (X <= lo) {
    book(0.0, ctx.fill1, X, 1.0);
    out.tau = 0.0;
    out.side = HitSide::Lower;
    return out;
  }
  if (X >= up) {
    book(0.0, ctx.mid_jump, X, 1.0);
    out.tau = 0.0;
    out.side = HitSide::Upper;
    mid_phase = true;
    lo = ctx.gamma_o;
    up = kInf;
  }

  const double bridge_cap = 20.0 * g.dt;
  bool absorbed = false;
  for (int i = 0; i < g.n; ++i) {
    (mid_phase ? racc2 : racc1) += g.disc[static_cast<size_t>(i)] * X;
    const double Xn = X + inc(i);
    const int ti = i + 1;
    bool hit_lo = Xn <= lo;
    bool hit_up = !hit_lo && Xn >= up;
    if (!hit_lo && !hit_up && uni) {
      double plo = 0.0, pup = 0.0;
      if (lo > -kInf) {
        const double prod = (X - lo) * (Xn - lo);
        if (prod < bridge_cap) plo = std::exp(-2.0 * prod / g.dt);
      }
      if (up < kInf) {
        const double prod = (up - X) * (up - Xn);
        if (prod < bridge_cap) pup = std::exp(-2.0 * prod / g.dt);
      }
      if (plo + pup > 0.0) {
        const double u = uni->uniform01();
        if (u < plo)
          hit_lo = true;
        else if (u < plo + pup)
          hit_up = true;
      }
    }
    if (hit_lo) {
      const double t = g.dt * ti;
      if (!out.tau) {
        out.tau = t;
        out.side = HitSide::Lower;
      }
      book(t, mid_phase ? ctx.fill2 : ctx.fill1, lo,
           g.disc[static_cast<size_t>(ti)]);
      absorbed = true;
      break;
    }
    if (hit_up) {
      const double t = g.dt * ti;
      if (!out.tau) {
        out.tau = t;
        out.side = HitSide::Upper;
      }
      book(t, ctx.mid_jump, up, g.disc[static_cast<size_t>(ti)]);
      mid_phase = true;
      lo = ctx.gamma_o;
      up = kInf;
      if (Xn <= lo) {
        // both boundaries crossed within one step; finish at the lower level
        book(t, ctx.fill2, lo, g.disc[static_cast<size_t>(ti)]);
        absorbed = true;
        break;
      }
    }
    X = Xn;
  }
  if (!absorbed) {
    book(g.t_end, mid_phase ? ctx.fill2 : ctx.fill1, X,
         g.disc[static_cast<size_t>(g.n)]);
    out.truncated = true;
  }
  out.cost += g.lamdt * (ctx.phi0 * racc1 + ctx.phimid * racc2);
  return out;
}

McEstimate run_optimal(const Model& m, const BoundaryMap& map, double x,
                       double c, const McConfig& cfg, const Grid& g,
                       int n_threads) {
  const OptCtx ctx = make_opt_ctx(m, map, c);
  const ZigguratNormal& zig = ZigguratNormal::instance();

  auto per_pair = [&](long long p, bool want_b, PathScratch& sc) {
    sc.g.resize(static_cast<size_t>(g.n));
    sc.filled = 0;
    Xoshiro256pp rng = pair_stream(cfg.seed, static_cast<std::uint64_t>(p));
    auto fill_to = [&](int k) {
      int target = std::min(g.n, (k + 512) & ~511);
      if (target <= k) target = k + 1;
      while (sc.filled < target)
        sc.g[static_cast<size_t>(sc.filled++)] = zig.sample(rng);
    };
    auto run_leg = [&](double sign, std::uint64_t path_idx) {
      auto inc = [&](int i) {
        if (i >= sc.filled) fill_to(i);
        return sign * (g.sdt * sc.g[static_cast<size_t>(i)]);
      };
      if (cfg.bridge_correction) {
        Xoshiro256pp uni = bridge_stream(cfg.seed, path_idx);
        return optimal_leg(ctx, g, x, inc, &uni);
      }
      return optimal_leg(ctx, g, x, inc,
                         static_cast<Xoshiro256pp*>(nullptr));
    };
    PairVals<1> v;
    const LegOut la = run_leg(1.0, static_cast<std::uint64_t>(2 * p));
    v.a[0] = la.cost;
    v.trunc += la.truncated ? 1 : 0;
    if (want_b) {
      const LegOut lb = run_leg(-1.0, static_cast<std::uint64_t>(2 * p + 1));
      v.b[0] = lb.cost;
      v.trunc += lb.truncated ? 1 : 0;
    }
    return v;
  };

  const RunStats<1> st =
      run_pairs<1, PathScratch>(cfg.n_paths, n_threads, per_pair);
  return McEstimate{st.mean[0], st.se[0], cfg.n_paths, cfg, st.trunc};
}

// --- the reflection heuristic ------------------------------------------------
// Wait for the first touch of the initial upper boundary, take the single
// admissible projection jump to c_hat there, then hold. After the jump the
// inventory is frozen, so the remainder collapses onto the same per-increment
// weights as the constant-inventory policies, anchored at the crossing node.

McEstimate run_reflect(const Model& m, const BoundaryMap& map, double x,
                       double c, const McConfig& cfg, const Grid& g,
                       int n_threads) {
  const Boundaries b = map.at(c);
  if (b.regime == Regime::ConstantLower)
    throw std::invalid_argument(
        "reflect-at-beta requires inventory below the interior target level");
  const double up = b.beta_hat;
  const double jump = m.c_hat() - c;
  const double phi0 = m.phi(c).value;
  const double phimid = m.phi(m.c_hat()).value;

  std::vector<double> wv(static_cast<size_t>(g.n));
  std::vector<double> head(static_cast<size_t>(g.n) + 1);
  const double krun = g.lamdt * phimid;
  const double ktail = g.disc[static_cast<size_t>(g.n)] * phimid;
  for (int j = 0; j < g.n; ++j)
    wv[static_cast<size_t>(j)] =
        g.sdt * (krun * g.tailsum[static_cast<size_t>(j) + 1] + ktail);
  for (int k = 0; k <= g.n; ++k)
    head[static_cast<size_t>(k)] =
        krun * g.tailsum[static_cast<size_t>(k)] + ktail;

  const ZigguratNormal& zig = ZigguratNormal::instance();
  const double bridge_cap = 20.0 * g.dt;

  auto per_pair = [&](long long p, bool want_b, PathScratch& sc) {
    sc.g.resize(static_cast<size_t>(g.n));
    Xoshiro256pp rng = pair_stream(cfg.seed, static_cast<std::uint64_t>(p));
    for (int j = 0; j < g.n; ++j)
      sc.g[static_cast<size_t>(j)] = zig.sample(rng);

    auto run_leg = [&](double sign, std::uint64_t path_idx) {
      Xoshiro256pp uni = bridge_stream(cfg.seed, path_idx);
      double X = x;
      double racc = 0.0;
      int k = -1;
      if (X >= up) k = 0;
      if (k < 0) {
        for (int i = 0; i < g.n; ++i) {
          racc += g.disc[static_cast<size_t>(i)] * X;
          const double Xn = X + sign * (g.sdt * sc.g[static_cast<size_t>(i)]);
          bool hit = Xn >= up;
          if (!hit && cfg.bridge_correction) {
            const double prod = (up - X) * (up - Xn);
            if (prod < bridge_cap &&
                uni.uniform01() < std::exp(-2.0 * prod / g.dt))
              hit = true;
          }
          X = Xn;
          if (hit) {
            k = i + 1;
            break;
          }
        }
      }
      struct {
        double cost;
        bool trunc;
      } r{0.0, false};
      if (k < 0) {
        r.cost = g.lamdt * phi0 * racc +
                 g.disc[static_cast<size_t>(g.n)] * X * phi0;
        r.trunc = true;
      } else {
        const double price = k == 0 ? x : up;
        double acc = 0.0;
        for (int j = k; j < g.n; ++j)
          acc = std::fma(wv[static_cast<size_t>(j)],
                         sc.g[static_cast<size_t>(j)], acc);
        r.cost = g.lamdt * phi0 * racc +
                 g.disc[static_cast<size_t>(k)] * price * jump +
                 X * head[static_cast<size_t>(k)] + sign * acc;
      }
      return r;
    };

    PairVals<1> v;
    const auto ra = run_leg(1.0, static_cast<std::uint64_t>(2 * p));
    v.a[0] = ra.cost;
    v.trunc += ra.trunc ? 1 : 0;
    if (want_b) {
      const auto rb = run_leg(-1.0, static_cast<std::uint64_t>(2 * p + 1));
      v.b[0] = rb.cost;
      v.trunc += rb.trunc ? 1 : 0;
    }
    return v;
  };

  const RunStats<1> st =
      run_pairs<1, PathScratch>(cfg.n_paths, n_threads, per_pair);
  return McEstimate{st.mean[0], st.se[0], cfg.n_paths, cfg, st.trunc};
}

}  // namespace

PathOutcome apply_optimal_policy(const Model& m, const BoundaryMap& map,
                                 double x, double c,
                                 std::span<const double> increments,
                                 double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("dt must be positive");
  if (!std::isfinite(x)) throw std::invalid_argument("x must be finite");
  if (!(c >= 0.0 && c <= 1.0))
    throw std::invalid_argument("inventory must lie in [0, 1]");
  if (increments.size() > static_cast<size_t>(2e7))
    throw std::invalid_argument("path exceeds the supported step count");

  const Grid g =
      make_grid(m.lambda(), dt, static_cast<long long>(increments.size()));
  const OptCtx ctx = make_opt_ctx(m, map, c);
  auto inc = [&](int i) { return increments[static_cast<size_t>(i)]; };
  const LegOut leg =
      optimal_leg(ctx, g, x, inc, static_cast<Xoshiro256pp*>(nullptr));

  PathOutcome out;
  out.cost = leg.cost;
  out.tau_hit = leg.tau;
  out.hit_side = leg.side;
  for (int j = 0; j < leg.n_jumps; ++j)
    out.jump_events.emplace_back(leg.jumps[j].time, leg.jumps[j].size);
  return out;
}

McEstimate mc_cost(const Model& m, const BoundaryMap& map, double x, double c,
                   PolicySpec policy, const McConfig& cfg, int n_threads) {
  if (!std::isfinite(x)) throw std::invalid_argument("x must be finite");
  if (!(c >= 0.0 && c <= 1.0))
    throw std::invalid_argument("inventory must lie in [0, 1]");
  check_cfg(m, cfg);
  const Grid g = make_grid(m.lambda(), cfg.dt, grid_steps(cfg));

  switch (policy.kind) {
    case Policy::FullFillNow:
      return McEstimate{x * (1.0 - c), 0.0, cfg.n_paths, cfg, 0};
    case Policy::NoAction:
      return run_linear(m, x, c, 0.0, cfg, g, n_threads);
    case Policy::Delta: {
      if (!(policy.delta >= 0.0) || policy.delta > 1.0 - c + 1e-12)
        throw std::invalid_argument("delta must lie in [0, 1 - c]");
      const double d = std::min(policy.delta, 1.0 - c);
      return run_linear(m, x, c + d, x * d, cfg, g, n_threads);
    }
    case Policy::JumpToChatThenNothing: {
      const double target = std::max(c, m.c_hat());
      return run_linear(m, x, target, x * (target - c), cfg, g, n_threads);
    }
    case Policy::Optimal:
      return run_optimal(m, map, x, c, cfg, g, n_threads);
    case Policy::ReflectAtBeta:
      return run_reflect(m, map, x, c, cfg, g, n_threads);
  }
  throw std::logic_error("unhandled policy");
}

double closed_form_cost(const Model& m, PolicySpec policy, double x,
                        double c) {
  if (!(c >= 0.0 && c <= 1.0))
    throw std::invalid_argument("inventory must lie in [0, 1]");
  switch (policy.kind) {
    case Policy::NoAction:
      return x * m.phi(c).value;
    case Policy::FullFillNow:
      return x * (1.0 - c);
    case Policy::Delta: {
      if (!(policy.delta >= 0.0) || policy.delta > 1.0 - c + 1e-12)
        throw std::invalid_argument("delta must lie in [0, 1 - c]");
      const double d = std::min(policy.delta, 1.0 - c);
      return x * (d + m.phi(c + d).value);
    }
    default:
      throw std::invalid_argument("no closed form for this policy");
  }
}

LaplaceCheck laplace_check(const Model& m, double x,
                           std::optional<double> lower,
                           std::optional<double> upper, const McConfig& cfg,
                           int n_threads) {
  check_cfg(m, cfg);
  if (!lower && !upper)
    throw std::invalid_argument("at least one level must be given");
  const bool two = lower && upper;
  const double lo = lower ? *lower : -kInf;
  const double up = upper ? *upper : kInf;
  if ((lower && !std::isfinite(lo)) || (upper && !std::isfinite(up)))
    throw std::invalid_argument("levels must be finite");
  if (!std::isfinite(x)) throw std::invalid_argument("x must be finite");
  if (two && !(lo < up)) throw std::invalid_argument("levels must be ordered");
  if (x < lo || x > up)
    throw std::invalid_argument("x must lie between the levels");

  const double theta = m.sqrt_two_lambda();
  double exact_d, exact_s = 0.0;
  if (two) {
    const double A = theta * (x - lo), B = theta * (up - x);
    const double den = 1.0 - std::exp(-2.0 * (A + B));
    const double wa = std::exp(-B) * (1.0 - std::exp(-2.0 * A));  // upper hit
    const double wb = std::exp(-A) * (1.0 - std::exp(-2.0 * B));  // lower hit
    exact_d = (wa + wb) / den;
    exact_s = (up * wa + lo * wb) / den;
  } else if (upper) {
    exact_d = std::exp(-theta * (up - x));
  } else {
    exact_d = std::exp(-theta * (x - lo));
  }

  LaplaceCheck out{McEstimate{0.0, 0.0, cfg.n_paths, cfg, 0}, exact_d,
                   std::nullopt, std::nullopt};
  if (x == lo || x == up) {
    out.discount = McEstimate{1.0, 0.0, cfg.n_paths, cfg, 0};
    if (two) {
      out.discounted_spot = McEstimate{x, 0.0, cfg.n_paths, cfg, 0};
      out.discounted_spot_exact = exact_s;
    }
    return out;
  }

  const Grid g = make_grid(m.lambda(), cfg.dt, grid_steps(cfg));
  const ZigguratNormal& zig = ZigguratNormal::instance();
  const double bridge_cap = 20.0 * g.dt;
  const bool has_lo = lower.has_value();
  const bool has_up = upper.has_value();

  auto per_pair = [&](long long p, bool want_b, PathScratch& sc) {
    sc.g.resize(static_cast<size_t>(g.n));
    sc.filled = 0;
    Xoshiro256pp rng = pair_stream(cfg.seed, static_cast<std::uint64_t>(p));
    auto fill_to = [&](int k) {
      int target = std::min(g.n, (k + 512) & ~511);
      if (target <= k) target = k + 1;
      while (sc.filled < target)
        sc.g[static_cast<size_t>(sc.filled++)] = zig.sample(rng);
    };
    auto run_leg = [&](double sign, std::uint64_t path_idx) {
      Xoshiro256pp uni = bridge_stream(cfg.seed, path_idx);
      double X = x;
      struct {
        double d, s;
        bool trunc;
      } r{0.0, 0.0, false};
      for (int i = 0; i < g.n; ++i) {
        if (i >= sc.filled) fill_to(i);
        const double Xn =
            X + sign * (g.sdt * sc.g[static_cast<size_t>(i)]);
        bool hit_lo = has_lo && Xn <= lo;
        bool hit_up = !hit_lo && has_up && Xn >= up;
        if (!hit_lo && !hit_up && cfg.bridge_correction) {
          double plo = 0.0, pup = 0.0;
          if (has_lo) {
            const double prod = (X - lo) * (Xn - lo);
            if (prod < bridge_cap) plo = std::exp(-2.0 * prod / g.dt);
          }
          if (has_up) {
            const double prod = (up - X) * (up - Xn);
            if (prod < bridge_cap) pup = std::exp(-2.0 * prod / g.dt);
          }
          if (plo + pup > 0.0) {
            const double u = uni.uniform01();
            if (u < plo)
              hit_lo = true;
            else if (u < plo + pup)
              hit_up = true;
          }
        }
        if (hit_lo || hit_up) {
          r.d = g.disc[static_cast<size_t>(i) + 1];
          r.s = r.d * (hit_lo ? lo : up);
          return r;
        }
        X = Xn;
      }
      r.trunc = true;
      return r;
    };

    PairVals<2> v;
    const auto ra = run_leg(1.0, static_cast<std::uint64_t>(2 * p));
    v.a[0] = ra.d;
    v.a[1] = ra.s;
    v.trunc += ra.trunc ? 1 : 0;
    if (want_b) {
      const auto rb = run_leg(-1.0, static_cast<std::uint64_t>(2 * p + 1));
      v.b[0] = rb.d;
      v.b[1] = rb.s;
      v.trunc += rb.trunc ? 1 : 0;
    }
    return v;
  };

  const RunStats<2> st =
      run_pairs<2, PathScratch>(cfg.n_paths, n_threads, per_pair);
  out.discount = McEstimate{st.mean[0], st.se[0], cfg.n_paths, cfg, st.trunc};
  if (two) {
    out.discounted_spot =
        McEstimate{st.mean[1], st.se[1], cfg.n_paths, cfg, st.trunc};
    out.discounted_spot_exact = exact_s;
  }
  return out;
}

}  // namespace finfuel
