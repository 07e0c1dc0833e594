#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace factorcv {

/// Exit codes: 0 success, 1 numerical failure, 2 usage or input error.
enum ExitCode : int { kExitOk = 0, kExitNumeric = 1, kExitUsage = 2 };

/// Entry point of the `factorcv` command (subcommands select, simulate,
/// empirical). Normal output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace factorcv
