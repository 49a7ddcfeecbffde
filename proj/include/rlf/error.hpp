#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rlf {

enum class ErrorCode {
  invalid_input,
  configuration,
  integration_diverged,
  unsupported_exponent,
  degenerate_radius,
  invalid_delta,
  incompatible_ensembles,
  log_sign,
  io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI, the Python module) can map it without string matching.
class LabError : public std::runtime_error {
 public:
  LabError(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace rlf
