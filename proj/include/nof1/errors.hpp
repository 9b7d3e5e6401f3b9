#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nof1 {

// Base for every error the engine raises. Each kind carries the CLI exit code
// and the machine-readable code the HTTP service reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  virtual int exit_code() const noexcept { return 1; }
  virtual std::string_view code() const noexcept { return "internal"; }
};

// Invalid input value. `field` is a dotted path such as "residual.correlation".
class ParameterError : public Error {
 public:
  ParameterError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }
  int exit_code() const noexcept override { return 2; }
  std::string_view code() const noexcept override { return "validation"; }

 private:
  std::string field_;
};

// Malformed sequence file. Lines are 1-based.
class ParseError : public ParameterError {
 public:
  ParseError(std::size_t line, const std::string& message)
      : ParameterError("sequences", "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }
  std::string_view code() const noexcept override { return "parse"; }

 private:
  std::size_t line_;
};

// Shrunken estimates requested for a common-slope model.
class UnsupportedModelError : public ParameterError {
 public:
  using ParameterError::ParameterError;
  std::string_view code() const noexcept override { return "unsupported_model"; }
};

// Enumeration would exceed the configured sequence cap.
class TooLargeError : public ParameterError {
 public:
  using ParameterError::ParameterError;
  std::string_view code() const noexcept override { return "too_large"; }
};

// The summed information matrix is singular for the named coordinate.
class InestimableError : public Error {
 public:
  InestimableError(std::string coordinate, const std::string& message)
      : Error(message), coordinate_(std::move(coordinate)) {}

  const std::string& coordinate() const noexcept { return coordinate_; }
  int exit_code() const noexcept override { return 3; }
  std::string_view code() const noexcept override { return "inestimable"; }

 private:
  std::string coordinate_;
};

// No design within the search bounds meets the requirement.
class InfeasibleError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
  std::string_view code() const noexcept override { return "infeasible"; }
};

// Compute deadline passed before a result was complete.
class TimeoutError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 5; }
  std::string_view code() const noexcept override { return "timeout"; }
};

}  // namespace nof1
