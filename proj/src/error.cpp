#include "motionqa/error.hpp"

namespace motionqa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AllZeroVolume: return "AllZeroVolume";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SliceTooSmall: return "SliceTooSmall";
    case ErrorCode::DegenerateBackground: return "DegenerateBackground";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ShapeUnderflow: return "ShapeUnderflow";
    case ErrorCode::NonFiniteTerm: return "NonFiniteTerm";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DegenerateTable: return "DegenerateTable";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MismatchedCohorts: return "MismatchedCohorts";
    case ErrorCode::InsufficientPatients: return "InsufficientPatients";
    case ErrorCode::EmptyStratum: return "EmptyStratum";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::MissingVolume: return "MissingVolume";
    case ErrorCode::StoreWriteError: return "StoreWriteError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingSeverity: return "MissingSeverity";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace motionqa
