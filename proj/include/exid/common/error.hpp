#pragma once

#include <stdexcept>
#include <string>

namespace exid {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or vector dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An API was called out of contract (bad argument, wrong call order).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Numerical training failed (non-finite values, unmet convergence threshold).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A name was not found in a registry.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// A decision tree refers to features or actions its environment lacks.
class TreeDefinitionError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed. Line and column are 1-based; zero means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column = 0)
      : Error(format(message, line, column)), line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& message, int line, int column) {
    if (line <= 0) return message;
    std::string where = "line " + std::to_string(line);
    if (column > 0) where += ", column " + std::to_string(column);
    return where + ": " + message;
  }

  int line_;
  int column_;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

/// Two artifacts were produced for different environments.
class EnvMismatchError : public Error {
 public:
  using Error::Error;
};

/// A reduced buffer does not meet the reduced-buffer conditions.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace exid
