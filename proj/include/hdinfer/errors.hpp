#pragma once

#include <stdexcept>
#include <string>

namespace hdinfer {

enum class ErrorCode {
  ok = 0,
  non_finite,
  constant_column,
  dimension_mismatch,
  underdetermined,
  degenerate_variance,
  saturated_fit,
  degenerate_tau,
  no_fixed_point,
  empty_group,
  group_mismatch,
  group_out_of_range,
  invalid_alpha,
  degenerate_split,
  empty_truth,
  non_positive_weight,
  not_positive_definite,
  invalid_scenario,
  input_not_found,
  invalid_argument,
  io_error,
  internal,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a stable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + msg), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace hdinfer
