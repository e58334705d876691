#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rjm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kVersion = "0.1.0";

/// Runs the command line `args` (args[0] is the program name). Returns the
/// process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands "a:b:step" into a + i * step for every i with a + i * step <= b
/// (within rounding); a comma list or single value is also accepted.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace rjm::cli
