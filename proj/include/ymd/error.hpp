#pragma once

#include <stdexcept>
#include <string>

namespace ymd {

enum class ErrorCode {
  grid_mismatch,
  invalid_argument,
  inadmissible_exponents,
  not_in_algebra,
  no_convergence,
  picard_divergence,
  blow_up,
  io_failure,
  corrupt_checkpoint,
  unsupported_version,
  dimension_mismatch,
  config_violation,
  cost_guard,
  max_iterations,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::grid_mismatch: return "grid mismatch";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::inadmissible_exponents: return "inadmissible exponents";
    case ErrorCode::not_in_algebra: return "not in algebra";
    case ErrorCode::no_convergence: return "no convergence";
    case ErrorCode::picard_divergence: return "picard divergence";
    case ErrorCode::blow_up: return "blow-up";
    case ErrorCode::io_failure: return "i/o failure";
    case ErrorCode::corrupt_checkpoint: return "corrupt checkpoint";
    case ErrorCode::unsupported_version: return "unsupported version";
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::config_violation: return "config violation";
    case ErrorCode::cost_guard: return "cost guard";
    case ErrorCode::max_iterations: return "max iterations exceeded";
  }
  return "unknown";
}

/// Every failure in the library is reported as an Error carrying a code the
/// CLI maps onto its exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ymd
