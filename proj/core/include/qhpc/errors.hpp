#pragma once

#include <stdexcept>
#include <string>

namespace qhpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax-level failure while reading a descriptor or scenario document.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& reason)
      : Error("parse error at " + std::to_string(line) + ":" +
              std::to_string(column) + ": " + reason),
        line(line),
        column(column),
        reason(reason) {}

  int line;
  int column;
  std::string reason;
};

/// Semantic violation in an otherwise well-formed document.
class ValidationError : public Error {
 public:
  ValidationError(std::string field_in, const std::string& reason_in, int line_in = 0)
      : Error("validation error on '" + field_in + "': " + reason_in),
        field(std::move(field_in)),
        reason(reason_in),
        line(line_in) {}

  std::string field;
  std::string reason;
  int line;  // 0 when unknown
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

class StaleClockError : public Error {
 public:
  using Error::Error;
};

class NoQpuError : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

class InfeasibleTarget : public Error {
 public:
  using Error::Error;
};

/// Raised when the simulator detects a broken internal invariant
/// (conservation, causality, exclusivity). Never swallowed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace qhpc
