#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace selfreport {

// Categories map one-to-one onto the C API status codes and CLI exit codes.
enum class ErrorKind {
  domain,     // invalid values or violated preconditions
  config,     // missing or inconsistent configuration
  usage,      // bad command-line usage
  transport,  // backend or network failure
  io,         // filesystem failure
  integrity,  // digest mismatch in a run directory
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace selfreport
