#include "how2/util/error.hpp"

namespace how2 {

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::config: return "config";
    case ErrorCategory::gateway: return "gateway";
    case ErrorCategory::protocol: return "protocol";
    case ErrorCategory::capability: return "capability";
    case ErrorCategory::undefined: return "undefined";
    case ErrorCategory::alignment: return "alignment";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

void throw_error(ErrorCategory category, const std::string& message) {
  switch (category) {
    case ErrorCategory::parse: throw ParseError(message);
    case ErrorCategory::domain: throw DomainError(message);
    case ErrorCategory::config: throw ConfigError(message);
    case ErrorCategory::gateway: throw GatewayError(message);
    case ErrorCategory::protocol: throw ProtocolError(message);
    case ErrorCategory::capability: throw CapabilityError(message);
    case ErrorCategory::undefined: throw UndefinedError(message);
    case ErrorCategory::alignment: throw AlignmentError(message);
    case ErrorCategory::validation: throw ValidationError(message);
    case ErrorCategory::io: throw IoError(message);
  }
  throw Error(category, message);
}

}  // namespace how2
