#pragma once

#include <iosfwd>

namespace dsm {

/// Exit statuses of the batch front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitTrendFailed = 2;

/// Parses flags, runs the configured grid and writes the reports.
///
///   --config PATH   JSON run configuration (defaults apply without it)
///   --out DIR       overrides the configured output directory
///   --seed N        overrides both the data seed and the solver seed
///   --solver KIND   exact | heuristic
///   --check-trends  exit with status 2 when a trend check fails
///   --dump-catalog PATH  writes the active appliance catalog as JSON
///
/// Errors are reported on `err` and yield status 1.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dsm
