#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spine_eval {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitBadInput = 2;

// Entry point behind the `spine-eval` binary. `args` excludes the program
// name. Reports and files go to `out` (or --out), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spine_eval
