#pragma once

#include <string>

namespace finfuel {

/// Shortest decimal form that parses back to exactly the same double.
/// Integral values keep a trailing ".0" so numeric columns stay visibly
/// floating point; infinities serialize as the sentinels "-inf"/"+inf".
std::string format_double(double v);

/// Entry point behind the command-line binary: parses a subcommand of
/// {boundaries, value, verify, simulate, geometry} plus flags, optionally
/// seeded from a JSON config file (flags win). Returns 0 on success, 1 when
/// verification ran and failed, 2 on configuration errors.
int run_cli(int argc, const char* const* argv);

}  // namespace finfuel
