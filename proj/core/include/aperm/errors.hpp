#pragma once

#include <stdexcept>
#include <string>

namespace aperm {

/// Failure categories. Each maps to a distinct process exit code in the CLI.
enum class ErrorKind {
  parse,
  domain,
  degenerate_data,
  unsupported_design,
  calibration_failure,
  numeric,
  size,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(ErrorKind::parse,
              line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

/// Data that admits no test, e.g. all observations identical.
class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& what)
      : Error(ErrorKind::degenerate_data, what) {}
};

class UnsupportedDesignError : public Error {
 public:
  explicit UnsupportedDesignError(const std::string& what)
      : Error(ErrorKind::unsupported_design, what) {}
};

/// Beta calibration could not be fitted; callers fall back to the raw bound.
class CalibrationError : public Error {
 public:
  explicit CalibrationError(const std::string& what)
      : Error(ErrorKind::calibration_failure, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// A combinatorial guard rail was exceeded.
class SizeError : public Error {
 public:
  explicit SizeError(const std::string& what) : Error(ErrorKind::size, what) {}
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

}  // namespace aperm
