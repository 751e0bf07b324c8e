#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace diagnet::cli {

enum ExitCode : int {
  kOk = 0,
  kModuleError = 1,      // a library error, message printed verbatim
  kUsageError = 2,       // bad flags, config keys or files
  kBudgetExhausted = 3,  // the partial trajectory is still written
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace diagnet::cli
