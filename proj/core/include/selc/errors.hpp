#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selc {

/// Root of every exception thrown by the library. The CLI maps the
/// subclasses onto distinct exit codes, so new error kinds should derive
/// from one of the category classes below rather than from Error directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Category: caller passed something outside the mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Selective risk requested for a selector that accepts nothing.
class UndefinedRiskError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  /// 1-based line (row) number of the offending input, 0 if unknown.
  std::size_t line() const noexcept { return line_; }
  /// 1-based column, 0 if not applicable.
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    std::string msg = "line " + std::to_string(line);
    if (column > 0) msg += ", column " + std::to_string(column);
    return msg + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

}  // namespace selc
