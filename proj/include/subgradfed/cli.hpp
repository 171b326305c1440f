#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace subgradfed {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIo = 3,
  kExitDivergence = 4,
};

/// Entry point of the `subgradfed` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace subgradfed
