#include "selfreport/error.hpp"

namespace selfreport {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain error";
    case ErrorKind::config: return "configuration error";
    case ErrorKind::usage: return "usage error";
    case ErrorKind::transport: return "transport error";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::integrity: return "integrity error";
  }
  return "error";
}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace selfreport
