#pragma once

#include <iosfwd>

namespace adcp::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kAttackFailed = 3,
  kOracleFailure = 4,
};

/// Runs the adcp command line with the given arguments (argv[0] included).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adcp::cli
