#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcimpute {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value lies outside the domain an operation accepts.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A marginal was queried before it saw any observation.
class NotFittedError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (batch too small, bad config).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Input data does not fit the declared column schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Linear algebra failed (non positive definite, singular, eigenvalue floor).
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double diagnostic)
      : Error(what), diagnostic_(diagnostic) {}
  /// Smallest eigenvalue or condition estimate that triggered the failure.
  double diagnostic() const noexcept { return diagnostic_; }

 private:
  double diagnostic_;
};

/// The rejection-sampling oracle cannot reach the requested draw count.
class OracleInfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace gcimpute
