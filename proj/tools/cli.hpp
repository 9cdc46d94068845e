#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cpwlslice::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInputError = 2,     // model or ROI could not be loaded/verified
  kGeometryError = 3,  // partition incomplete; partial outputs written where possible
};

/// Runs the command line `args` (args[0] is the program name). The one-line
/// JSON summary goes to `out`, logs and usage text to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cpwlslice::cli
