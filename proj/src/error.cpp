#include "spde/error.hpp"

namespace spde {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidDimension: return "invalid-dimension";
    case ErrorKind::kOutOfRange: return "out-of-range";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kInvalidTime: return "invalid-time";
    case ErrorKind::kAliasing: return "aliasing";
    case ErrorKind::kInvalidNoise: return "invalid-noise";
    case ErrorKind::kInadmissibleNoise: return "inadmissible-noise";
    case ErrorKind::kInadmissibleDrift: return "inadmissible-drift";
    case ErrorKind::kStability: return "stability";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kCouplingViolation: return "coupling-violation";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kUnsupportedModel: return "unsupported-model";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kValidation: return "validation";
  }
  return "unknown";
}

}  // namespace spde
