#include "glaris/error.hpp"

namespace glaris {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::empty_input: return "empty input";
    case ErrorCode::discontinuous_stream: return "discontinuous stream";
    case ErrorCode::unsupported_format: return "unsupported format";
    case ErrorCode::invalid_rate_index: return "invalid rate index";
    case ErrorCode::configuration: return "configuration error";
    case ErrorCode::corrupt_stream: return "corrupt stream";
    case ErrorCode::corrupt_packet: return "corrupt packet";
    case ErrorCode::short_packet: return "short packet";
    case ErrorCode::protocol: return "protocol error";
    case ErrorCode::parse: return "parse error";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::no_stationary_distribution: return "no unique stationary distribution";
    case ErrorCode::internal: return "internal error";
  }
  return "unknown error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

}  // namespace glaris
