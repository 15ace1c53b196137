#pragma once

#include <string>
#include <vector>

namespace motionqa::cli {

inline constexpr const char* kToolkitVersion = "1.0.0";

/// Documented process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kConfigError = 2,
  kIoError = 3,
  kMissingPair = 4,
  kCohortMismatch = 5,
  kMissingSeverity = 6,
};

/// Runs the command line; diagnostics go to stderr as a single line.
int run(const std::vector<std::string>& args);

}  // namespace motionqa::cli
