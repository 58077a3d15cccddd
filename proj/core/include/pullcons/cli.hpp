#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace pullcons {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;

/// Entry point of the `pullcons` tool. args[0] is the program name.
/// JSON-lines records go to --out (or `out` when absent); a CSV summary goes
/// to --summary, defaulting to "<out>.summary.csv" when --out is set.
/// Diagnostics and a one-line human report go to `err`.
int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace pullcons
