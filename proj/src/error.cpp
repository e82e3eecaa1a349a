#include "carto/error.hpp"

namespace carto {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::Validation: return "validation_error";
    case ErrorCode::DegenerateInput: return "degenerate_input";
    case ErrorCode::Convergence: return "convergence_failure";
    case ErrorCode::Selection: return "selection_error";
    case ErrorCode::Scan: return "scan_error";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::InvalidArgument: return "invalid_argument";
  }
  return "unknown";
}

}  // namespace carto
