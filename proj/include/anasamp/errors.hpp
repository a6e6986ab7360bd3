#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anasamp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed specification text. Positions are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A mathematically invalid request: invalid coordinates, a degenerate tree
/// family, an argument outside the domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Retry loop ran out of attempts before accepting an object.
class AttemptsExhausted : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace anasamp
