#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace motionqa {

enum class ErrorCode {
  AllZeroVolume,
  FormatError,
  DimMismatch,
  EmptyRegion,
  InvalidArgument,
  SliceTooSmall,
  DegenerateBackground,
  TooFewSamples,
  ShapeUnderflow,
  NonFiniteTerm,
  ZeroVariance,
  DegenerateTable,
  EmptyInput,
  MismatchedCohorts,
  InsufficientPatients,
  EmptyStratum,
  SingleClass,
  MissingVolume,
  StoreWriteError,
  IoError,
  MissingSeverity,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the toolkit carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace motionqa
