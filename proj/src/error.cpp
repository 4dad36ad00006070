#include "sgflow/error.hpp"

namespace sgflow {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::shape_mismatch: return "shape mismatch";
    case ErrorCode::numerical_breakdown: return "numerical breakdown";
    case ErrorCode::not_converged: return "solver did not converge";
    case ErrorCode::singular: return "singular system";
    case ErrorCode::diverged: return "diverged state";
    case ErrorCode::stagnation: return "stagnation";
    case ErrorCode::io: return "i/o error";
  }
  return "unknown error";
}

}  // namespace sgflow
