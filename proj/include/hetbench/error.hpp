#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hetbench {

enum class ErrorKind {
  InvalidInput,
  ZeroVector,
  ShapeMismatch,
  FormatError,
  PartitionRetryExhausted,
  SupportError,
  NumericalError,
  CoalitionTooLarge,
  ConfigError,
  ReportError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::PartitionRetryExhausted: return "PartitionRetryExhausted";
    case ErrorKind::SupportError: return "SupportError";
    case ErrorKind::NumericalError: return "NumericalError";
    case ErrorKind::CoalitionTooLarge: return "CoalitionTooLarge";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ReportError: return "ReportError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` discriminates the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace hetbench
