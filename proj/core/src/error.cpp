#include "softsnap/error.hpp"

namespace softsnap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
      return "invalid_argument";
    case ErrorCode::infeasible_target:
      return "infeasible_target";
    case ErrorCode::did_not_converge:
      return "did_not_converge";
    case ErrorCode::ambiguous_inversion:
      return "ambiguous_inversion";
    case ErrorCode::no_valid_path:
      return "no_valid_path";
    case ErrorCode::all_candidates_failed:
      return "all_candidates_failed";
    case ErrorCode::unknown_session:
      return "unknown_session";
  }
  return "unknown";
}

}  // namespace softsnap
