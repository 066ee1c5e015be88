#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace patchwork {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFiniteParameter,
  EmptyInput,
  NonUnitNormal,
  MemoryBudgetExceeded,
  DegenerateGradient,
  NonFiniteGradient,
  NumericalDegeneracy,
  DegenerateMesh,
  DegenerateBBox,
  ParseError,
  UnsupportedFormat,
  VersionMismatch,
  CorruptCheckpoint,
  InvalidConfig,
  IoError,
  FitAborted,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace patchwork
