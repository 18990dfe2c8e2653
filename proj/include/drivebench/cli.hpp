#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace drivebench {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Entry point behind the `drivebench` binary. `args` excludes the program
/// name. Data goes to files (and small results to `out`); logs and the
/// machine-readable error line go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drivebench
