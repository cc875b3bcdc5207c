#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace how2 {

// Machine-readable error classes surfaced by the CLI and the HTTP services.
enum class ErrorCategory {
  parse,
  domain,
  config,
  gateway,
  protocol,
  capability,
  undefined,
  alignment,
  validation,
  io,
};

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

template <ErrorCategory C>
class CategorizedError : public Error {
 public:
  explicit CategorizedError(const std::string& message) : Error(C, message) {}
};

using ParseError = CategorizedError<ErrorCategory::parse>;
using DomainError = CategorizedError<ErrorCategory::domain>;
using ConfigError = CategorizedError<ErrorCategory::config>;
using GatewayError = CategorizedError<ErrorCategory::gateway>;
using ProtocolError = CategorizedError<ErrorCategory::protocol>;
using CapabilityError = CategorizedError<ErrorCategory::capability>;
// A quantity is mathematically undefined for the given input (empty mean, zero ratio, ...).
using UndefinedError = CategorizedError<ErrorCategory::undefined>;
using AlignmentError = CategorizedError<ErrorCategory::alignment>;
using ValidationError = CategorizedError<ErrorCategory::validation>;
using IoError = CategorizedError<ErrorCategory::io>;

/// Throws the CategorizedError type matching `category`.
[[noreturn]] void throw_error(ErrorCategory category, const std::string& message);

}  // namespace how2
