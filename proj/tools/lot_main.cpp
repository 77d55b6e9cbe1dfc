#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  lot::cli::CommandResult result = lot::cli::dispatch(args);
  if (!result.summary_line.empty() && result.exit_code == 0)
    std::cout << result.summary_line << std::endl;
  return result.exit_code;
}
