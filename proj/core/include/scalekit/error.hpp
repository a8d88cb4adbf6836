#pragma once

#include <stdexcept>
#include <string>

namespace scalekit {

/// Base of every error raised by the library. The CLI maps each subclass to an
/// exit code, so new failure kinds should derive from the closest category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input could not be read or parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that names something the schema does not know.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A network or parameter set breaks a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DivisibilityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateResolutionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// A RegNet parameterization that cannot be turned into a network.
class DesignError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ExhaustionError : public Error {
 public:
  using Error::Error;
};

// Statistics over data without enough spread (zero variance, rank deficiency).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace scalekit
