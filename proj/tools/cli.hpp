#pragma once

#include <string>
#include <vector>

namespace lot::cli {

struct CommandResult {
  int exit_code = 0;
  std::vector<std::string> artifacts_written;
  std::string summary_line;
};

// Runs one CLI invocation (argv without the program name). Exit code 0 on
// success, 1 on module errors, 2 on usage errors.
CommandResult dispatch(const std::vector<std::string>& args);

}  // namespace lot::cli
