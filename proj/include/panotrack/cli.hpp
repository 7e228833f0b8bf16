#pragma once

#include <string>
#include <vector>

namespace panotrack {

// Command-line front end. args excludes the program name. Returns the
// process exit code: 0 success, 2 usage or schema problems, 3 tracking
// failures (a mode that never initializes, or nothing to evaluate).
int run_cli(const std::vector<std::string>& args);

}  // namespace panotrack
