#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace glaris {

enum class ErrorCode {
  invalid_argument,
  empty_input,
  discontinuous_stream,
  unsupported_format,
  invalid_rate_index,
  configuration,
  corrupt_stream,
  corrupt_packet,
  short_packet,
  protocol,
  parse,
  io,
  no_stationary_distribution,
  internal,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as glaris::Error; the code lets callers branch
// without matching on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace glaris
