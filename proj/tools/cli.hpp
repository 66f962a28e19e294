#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rotcon::cli {

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 success, 2 usage, 3 input data, 4 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rotcon::cli
