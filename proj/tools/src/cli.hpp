#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace geoloop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the geoloop tool; `args` excludes the program name.
/// Reports and CSV go to `out` (or --out), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geoloop::cli
