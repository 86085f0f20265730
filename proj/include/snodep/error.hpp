#pragma once

#include <stdexcept>
#include <string>

namespace snodep {

/// Base of every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform for an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of a function (log of a non-positive
/// number, non-integer Poisson counts, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared during a computation (solver blow-up, diverged
/// training).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid input data or configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace snodep
