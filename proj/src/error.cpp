#include "rlf/error.hpp"

namespace rlf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::integration_diverged: return "integration-diverged";
    case ErrorCode::unsupported_exponent: return "unsupported-exponent";
    case ErrorCode::degenerate_radius: return "degenerate-radius";
    case ErrorCode::invalid_delta: return "invalid-delta";
    case ErrorCode::incompatible_ensembles: return "incompatible-ensembles";
    case ErrorCode::log_sign: return "log-sign";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

LabError::LabError(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace rlf
