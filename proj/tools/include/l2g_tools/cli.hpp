#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace l2g::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericalAbort = 3,
};

/// Entry point shared by the binary and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace l2g::cli
