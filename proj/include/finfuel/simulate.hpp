#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "finfuel/boundaries.hpp"
#include "finfuel/model.hpp"

namespace finfuel {

// ---------------------------------------------------------------------------
// Deterministic RNG stack. SplitMix64 expands seeds, xoshiro256++ generates
// words, and a 256-layer ziggurat turns them into unit normals. All of it is
// exposed so tests can replay the exact streams the engine consumes.

struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

/// xoshiro256++ with its state expanded from (seed, index, tag) through
/// SplitMix64. Substreams are a pure function of their indices, never of
/// scheduling, which is what makes the engine's output thread-count
/// independent.
class Xoshiro256pp {
 public:
  Xoshiro256pp(std::uint64_t seed, std::uint64_t index, std::uint64_t tag) {
    SplitMix64 sm{seed};
    sm.state = sm.next() ^ ((index + 1) * 0x9E3779B97F4A7C15ULL);
    sm.state = sm.next() ^ ((tag + 1) * 0xBF58476D1CE4E5B9ULL);
    s_[0] = sm.next();
    s_[1] = sm.next();
    s_[2] = sm.next();
    s_[3] = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// 53-bit uniform in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t s_[4];
};

/// 256-layer rejection sampler for the standard normal. The tables are built
/// once at startup by closing the equal-area layer recursion; nothing is
/// hardcoded beyond the layer count, and tests pin the resulting tail split.
class ZigguratNormal {
 public:
  static const ZigguratNormal& instance();

  double sample(Xoshiro256pp& rng) const {
    for (;;) {
      const std::uint64_t w = rng.next();
      const int i = static_cast<int>(w & 255u);
      const double u = static_cast<double>(w >> 11) * 0x1.0p-53;
      if (u < ratio_[i]) {
        const double val = u * x_[i];
        return (w & 256u) ? -val : val;
      }
      double val;
      if (i == 0) {
        // Base layer miss: exponential-majorant sample of the tail past r.
        double xx, yy;
        do {
          xx = -std::log(open01(rng)) / r_;
          yy = -std::log(open01(rng));
        } while (yy + yy < xx * xx);
        val = r_ + xx;
      } else {
        const double cand = u * x_[i];
        const double y = f_[i] + rng.uniform01() * (f_[i + 1] - f_[i]);
        if (y >= std::exp(-0.5 * cand * cand)) continue;
        val = cand;
      }
      return (w & 256u) ? -val : val;
    }
  }

  /// Rightmost layer edge (the tail split point).
  double tail_split() const { return r_; }
  /// Common layer area; every layer of the table encloses exactly this much.
  double layer_area() const { return v_; }
  double edge(int i) const { return x_[i]; }
  double density(int i) const { return f_[i]; }

 private:
  ZigguratNormal();

  static double open01(Xoshiro256pp& rng) {
    return (static_cast<double>(rng.next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double r_;
  double v_;
  double x_[257];
  double f_[257];
  double ratio_[256];
};

/// Unit-normal increment stream shared by twin paths 2p and 2p+1; the odd
/// twin consumes the same values negated (antithetic pairing).
Xoshiro256pp pair_stream(std::uint64_t seed, std::uint64_t pair_index);

/// Per-path uniform stream feeding the bridge crossing tests. Kept separate
/// from the increments so the twins stay aligned on the shared gaussians even
/// when their crossing events differ.
Xoshiro256pp bridge_stream(std::uint64_t seed, std::uint64_t path_index);

// ---------------------------------------------------------------------------
// Monte Carlo engine.

/// Simulation parameters. Construction validates everything: the horizon must
/// push the discount factor below 1e-6 so truncation stays inside the stated
/// bias budget, and the step must not exceed 1e-2.
struct McConfig {
  long long n_paths;
  double dt;
  double horizon;
  std::uint64_t seed;
  bool bridge_correction;

  McConfig(const Model& m, long long n_paths, double dt, double horizon,
           std::uint64_t seed, bool bridge_correction);
};

enum class HitSide { Lower, Upper, None };

/// One realized path under a policy. jump_events holds (time, size) pairs;
/// a pair at the final grid time records a forced fill at the horizon.
struct PathOutcome {
  double cost;
  std::optional<double> tau_hit;
  HitSide hit_side;
  std::vector<std::pair<double, double>> jump_events;
};

/// Sample mean and error of the discounted cost over all paths;
/// std_error is the sample standard deviation divided by sqrt(n_paths).
/// truncated_paths counts paths that reached the horizon with a policy
/// action still pending and were force-completed there.
struct McEstimate {
  double mean;
  double std_error;
  long long n_paths;
  McConfig config;
  long long truncated_paths;
};

enum class Policy {
  Optimal,                // act at the free boundaries, two-stage fill
  NoAction,               // never purchase
  FullFillNow,            // buy everything at time zero
  Delta,                  // buy a fixed slice at time zero, then nothing
  JumpToChatThenNothing,  // raise inventory to the interior target level
                          // c_hat at time zero (no-op above it), then nothing
  ReflectAtBeta,          // first time the spot reaches the upper boundary,
                          // take the minimal admissible projection; the upper
                          // boundary recedes in inventory, so that projection
                          // is a single jump to c_hat
};

struct PolicySpec {
  Policy kind = Policy::NoAction;
  double delta = 0.0;  // Delta only: the time-zero purchase size
};

/// Serialization token: "optimal", "none", "full-fill", "delta",
/// "jump-to-target", "reflect-at-beta".
const char* policy_name(Policy p);

/// Runs the optimal two-stage policy on one externally supplied path.
/// increments are the Brownian steps themselves (the engine draws them as
/// sqrt(dt) times unit normals); detection is pure grid crossing, so the
/// outcome is a deterministic function of the arguments. Costs follow the
/// engine's conventions: left-rectangle running cost, jumps booked at the
/// first grid time past the crossing and priced at the boundary level
/// (at the current spot for a time-zero or forced fill).
PathOutcome apply_optimal_policy(const Model& m, const BoundaryMap& map,
                                 double x, double c,
                                 std::span<const double> increments,
                                 double dt);

/// Discounted-cost estimate under a policy from state (x, c). Antithetic
/// twins share each pair's gaussian stream; with bridge_correction each step
/// also tests the analytic within-step crossing probability. Identical
/// (cfg, inputs) give bit-identical estimates for any n_threads.
McEstimate mc_cost(const Model& m, const BoundaryMap& map, double x, double c,
                   PolicySpec policy, const McConfig& cfg, int n_threads = 0);

/// Exact expected cost for the policies that admit one: NoAction x*Phi(c),
/// FullFillNow x*(1-c), Delta x*(delta + Phi(c+delta)). Throws for the rest
/// and for inadmissible delta.
double closed_form_cost(const Model& m, PolicySpec policy, double x, double c);

/// First-passage calibration record: Monte Carlo estimates of the expected
/// discount at the hit time (and of the discounted hit-level spot when both
/// levels are finite) next to their closed forms.
struct LaplaceCheck {
  McEstimate discount;
  double discount_exact;
  std::optional<McEstimate> discounted_spot;
  std::optional<double> discounted_spot_exact;
};

/// Simulates first passage of the spot from x to the given level(s); at
/// least one must be finite and x must lie between them. x exactly on a
/// level is an immediate hit. Paths that never hit inside the horizon
/// contribute zero (their true discount is below the truncation budget)
/// and are counted as truncated.
LaplaceCheck laplace_check(const Model& m, double x,
                           std::optional<double> lower,
                           std::optional<double> upper, const McConfig& cfg,
                           int n_threads = 0);

}  // namespace finfuel
