#pragma once

#include <string>
#include <vector>

#include "finfuel/boundaries.hpp"
#include "finfuel/model.hpp"

namespace finfuel {

/// One named invariant check: passes iff max_violation <= tolerance
/// (NaN violations fail).
struct CheckResult {
  std::string name;
  bool passed;
  double max_violation;
  double tolerance;
};

/// Grid sizes for the scan-based checks. The defaults keep the whole suite
/// comfortably under a second; the acceptance gate rescans the variational
/// inequality on its own denser grid.
struct VerifyOptions {
  int boundary_grid = 256;
  int hjb_nx = 200;
  int hjb_nc = 100;
};

/// Runs every deterministic invariant of the constructed solution: critical
/// levels, root residuals, boundary monotonicity and limits, pasting at the
/// regime switch, derivative consistency, the variational inequality, the
/// mixed-partial fit probes, and the exit-region diagnostics.
std::vector<CheckResult> run_verification(const Model& m,
                                          const BoundaryMap& map,
                                          const VerifyOptions& opt = {});

bool all_passed(const std::vector<CheckResult>& checks);

}  // namespace finfuel
