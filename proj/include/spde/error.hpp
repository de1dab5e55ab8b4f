#pragma once

#include <stdexcept>
#include <string>

namespace spde {

enum class ErrorKind {
  kInvalidDimension,
  kOutOfRange,
  kDimensionMismatch,
  kInvalidTime,
  kAliasing,
  kInvalidNoise,
  kInadmissibleNoise,
  kInadmissibleDrift,
  kStability,
  kDivergence,
  kCouplingViolation,
  kInsufficientData,
  kUnsupportedModel,
  kInvalidArgument,
  kValidation,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` lets callers map failures
/// onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a trajectory produces a non-finite coefficient.
class DivergenceError : public Error {
 public:
  DivergenceError(long long step, const std::string& what)
      : Error(ErrorKind::kDivergence, what), step_(step) {}

  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

}  // namespace spde
