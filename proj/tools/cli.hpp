#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace resilex::cli {

enum ExitCode : int { kSuccess = 0, kInfeasible = 1, kInputError = 2 };

/// Runs the command line `args` (without the program name). Reports go to
/// the `--out` files or to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace resilex::cli
