#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace beaq::tools {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitCheckFailed = 3,
};

/// Runs the `beaq` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Keys accepted in a `simulate` config file.
const std::vector<std::string>& simulate_config_keys();

}  // namespace beaq::tools
