#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace htefs {

enum class ErrorCode {
  InvalidArgument,
  InfeasibleSpec,
  NotPositiveDefinite,
  SingularSystem,
  DimensionMismatch,
  LengthMismatch,
  DegenerateArms,
  ConstantColumn,
  PropensityOutOfRange,
  AllCandidatesFailed,
  ParseError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Writes a one-line warning to stderr unless warnings are muted.
void log_warning(std::string_view message);
void set_warnings_muted(bool muted);

}  // namespace htefs
