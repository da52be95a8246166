#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conelq::cli {

// Exit codes. Stable; documented in the README.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kSolverError = 2;
inline constexpr int kChecksFailed = 3;

/// Runs the tool on argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conelq::cli
