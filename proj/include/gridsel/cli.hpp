#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridsel {

/// Runs the command line `args` (args[0] is the program name). Returns the process
/// exit code: 0 on success, 1 on a failed stage, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridsel
