#include "vulnpipe/error.hpp"

namespace vulnpipe {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage:
      return "usage";
    case ErrorKind::Data:
      return "data";
    case ErrorKind::Io:
      return "io";
    case ErrorKind::Transport:
      return "transport";
    case ErrorKind::Scoring:
      return "scoring";
    case ErrorKind::Protocol:
      return "protocol";
  }
  return "unknown";
}

}  // namespace vulnpipe
