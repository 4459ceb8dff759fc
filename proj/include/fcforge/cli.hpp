#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fcforge {

inline constexpr const char* kToolVersion = "fcforge 0.3.0";

/// Exit codes of the command line.
enum ExitCode : int { kExitOk = 0, kExitDefects = 1, kExitUsage = 2 };

/// Runs the command line with `args` (without the program name). Progress
/// goes to `err`, the summary to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fcforge
