#pragma once

#include <stdexcept>
#include <string>

namespace tgss {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes do not agree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A hyperplane, halfspace or stripe with a zero direction vector.
class InvalidStripeError : public Error {
public:
  using Error::Error;
};

/// Gram system is singular because the search directions are linearly dependent.
class DependentDirectionsError : public Error {
public:
  using Error::Error;
};

/// Invalid solver / problem configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Coefficient field outside the admissible set, or A(c) not positive definite.
class AdmissibilityError : public Error {
public:
  using Error::Error;
};

/// Operator construction with invalid data.
class InvalidOperatorError : public Error {
public:
  using Error::Error;
};

/// A documented precondition of an algorithm step does not hold.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// A runtime diagnostic detected a violated theoretical invariant.
class InvariantViolation : public Error {
public:
  using Error::Error;
};

/// File or stream failure; message carries the path.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace tgss
