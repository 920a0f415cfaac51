#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mtjfp {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitFit = 4,
  kExitCalibration = 5,
};

/// Runs one CLI invocation.  `args` excludes the program name.  Data goes
/// to `out` when an output path is "-", diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtjfp
