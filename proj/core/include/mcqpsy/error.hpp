#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcqpsy {

// Base for every error the library raises on bad input. The CLI maps
// subclasses onto exit codes, so keep the hierarchy shallow.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content. `line` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DuplicateIdError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateDistributionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LatinSquareError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A statistic that is not defined on its input (zero variance, too few
// points). Report builders turn these into explicit "undefined" cells.
class UndefinedStatisticError : public Error {
 public:
  using Error::Error;
};

class InfiniteDivergenceError : public Error {
 public:
  using Error::Error;
};

// Network or auth failure talking to an inference endpoint. Retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Endpoint answered but the reply cannot be turned into four letter scores.
class MalformedReplyError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcqpsy
