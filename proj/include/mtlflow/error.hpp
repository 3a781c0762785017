#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtlflow {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (dimension mismatch, empty
/// input, out-of-range count).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A range [min, max] collapsed to a point.
class DegenerateRangeError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// No admissible sample could be built.
class EmptyDatasetError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Malformed text input. `line()` is 1-based; 0 when the problem is not tied
/// to a particular line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Cholesky met a non-positive pivot.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity showed up in a quantity that must stay finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtlflow
