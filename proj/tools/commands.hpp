#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace admp::cli {

/// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumerical = 3 };

/// Runs one command line (without the program name). Reports go to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace admp::cli
