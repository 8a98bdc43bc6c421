#pragma once

#include <stdexcept>
#include <string>

namespace rx {

enum class ErrorCode {
  invalid_argument,   // bad user input (config values, grid shapes, ...)
  unsupported,        // operation not defined for the given configuration
  numerical_failure,  // non-finite state, oracle self-check failure, ...
  parse_error,        // malformed JSON / config text
  internal,           // broken internal invariant
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_invalid(const std::string& msg) {
  throw Error(ErrorCode::invalid_argument, msg);
}
[[noreturn]] inline void throw_unsupported(const std::string& msg) {
  throw Error(ErrorCode::unsupported, msg);
}
[[noreturn]] inline void throw_numerical(const std::string& msg) {
  throw Error(ErrorCode::numerical_failure, msg);
}
[[noreturn]] inline void throw_parse(const std::string& msg) {
  throw Error(ErrorCode::parse_error, msg);
}
[[noreturn]] inline void throw_internal(const std::string& msg) {
  throw Error(ErrorCode::internal, msg);
}

}  // namespace rx
