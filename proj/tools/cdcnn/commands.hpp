#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdcnn::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kDataValidation = 3,
  kNumericFailure = 4,
};

// Runs one `cdcnn` invocation. args[0] is the program name. Diagnostics go to
// `err`, progress and results to `out`; the return value is the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cdcnn::cli
