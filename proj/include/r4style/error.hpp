#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace r4style {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data, files or configuration. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Parse failure in a line-oriented text format.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnknownWordError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateSentenceError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed SLMX payloads: bad magic, truncation, unsupported dtype.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Singular systems, non-finite objectives, diverging training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// XᵀX is not invertible; a ridge penalty is needed.
class SingularDesignError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace r4style
