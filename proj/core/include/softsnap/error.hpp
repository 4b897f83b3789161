#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace softsnap {

// Machine-readable failure categories. The service maps these 1:1 onto the
// error codes it returns in 4xx bodies.
enum class ErrorCode {
  invalid_argument,
  infeasible_target,
  did_not_converge,
  ambiguous_inversion,
  no_valid_path,
  all_candidates_failed,
  unknown_session,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace softsnap
