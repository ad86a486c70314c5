#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace simcount {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

// Entry point behind the `simcount` executable. `args` excludes the program
// name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace simcount
