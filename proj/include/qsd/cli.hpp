#pragma once

#include <string>
#include <vector>

namespace qsd {

// Full command-line entry point (argv without the program name). Returns
// the process exit code: 0 success, 1 runtime/numeric failure, 2 invalid
// configuration or arguments. Used directly by main() and by tests.
int run_cli(const std::vector<std::string>& args);

}  // namespace qsd
