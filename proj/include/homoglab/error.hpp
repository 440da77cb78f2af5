#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace homoglab {

enum class ErrorKind {
  InvalidDimension,
  InvalidSize,
  SymbolSingular,
  InvalidSpec,
  MismatchedGrids,
  NoConvergence,
  IllConditioned,
  DomainError,
  GeometryError,
  IndexError,
  DegenerateSeries,
  ScaleTooSmall,
  SingularAhom,
  GridMismatch,
  TooLarge,
  SingularSystem,
  ParseError,
  ValidationError,
  IOError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "InvalidDimension";
    case ErrorKind::InvalidSize: return "InvalidSize";
    case ErrorKind::SymbolSingular: return "SymbolSingular";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::MismatchedGrids: return "MismatchedGrids";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::GeometryError: return "GeometryError";
    case ErrorKind::IndexError: return "IndexError";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::ScaleTooSmall: return "ScaleTooSmall";
    case ErrorKind::SingularAhom: return "SingularAhom";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IOError: return "IOError";
  }
  return "Unknown";
}

/// Library-wide exception; every failure carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace homoglab
