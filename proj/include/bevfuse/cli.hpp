#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bevfuse {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs the command line `args` (without the program name). Reports go to
// `out`, usage and error messages to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bevfuse
