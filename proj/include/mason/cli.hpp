#pragma once

#include <ostream>

namespace mason::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. Metrics and summaries go to `out`, diagnostics to `err`.
/// Returns 0 on success, 2 on a usage error and 1 when the inputs cannot be processed.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mason::cli
