#include "patchwork/error.hpp"

namespace patchwork {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteParameter: return "NonFiniteParameter";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonUnitNormal: return "NonUnitNormal";
    case ErrorCode::MemoryBudgetExceeded: return "MemoryBudgetExceeded";
    case ErrorCode::DegenerateGradient: return "DegenerateGradient";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NumericalDegeneracy: return "NumericalDegeneracy";
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::DegenerateBBox: return "DegenerateBBox";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FitAborted: return "FitAborted";
  }
  return "Unknown";
}

void raise(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(to_string(code)) + ": " + message);
}

}  // namespace patchwork
