#pragma once

#include <stdexcept>
#include <string>

namespace vartool {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input to the expression kernel (bad literal, 0^negative, ...).
class ExprError : public Error {
 public:
  using Error::Error;
};

/// A substitution produced 0 raised to a negative power.
class SingularSubstitution : public ExprError {
 public:
  using ExprError::ExprError;
};

/// Invalid model declaration or a reference to an undeclared field.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A total derivative would exceed the configured jet-order cap.
class JetOrderError : public Error {
 public:
  using Error::Error;
};

/// Operation not implemented for the requested Lagrangian order.
class UnsupportedOrder : public Error {
 public:
  using Error::Error;
};

/// Numeric evaluation hit a point outside the domain of an expression.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Homotopy integral diverges at t = 0.
class NonIntegrableHomotopy : public Error {
 public:
  using Error::Error;
};

/// Parse failure with a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column),
        message_(msg) {}

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

}  // namespace vartool
