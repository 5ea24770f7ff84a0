// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/error.hpp"

namespace roadfriction {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kInfeasibleK: return "infeasible k";
    case ErrorKind::kEmptyCluster: return "empty cluster";
    case ErrorKind::kThresholdUnreachable: return "threshold unreachable";
    case ErrorKind::kEmptySegment: return "empty segment";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kRange: return "range error";
    case ErrorKind::kEnum: return "enum error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kInsufficientData: return "insufficient data";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kConvergence: return "convergence error";
    case ErrorKind::kState: return "state error";
    case ErrorKind::kSchema: return "schema error";
  }
  return "error";
}

}  // namespace roadfriction
