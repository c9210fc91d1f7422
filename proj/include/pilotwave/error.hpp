#pragma once

#include <stdexcept>
#include <string>

namespace pilotwave {

/// Base for every error raised by the library. The CLI maps the subclasses
/// onto exit codes, so new error kinds should derive from one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

/// An input violates a documented invariant (not Hermitian, not normalized,
/// effects not closing to the identity, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class MeasurementError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical guards. These signal that a computation left the regime where
/// its result can be trusted rather than a bad argument.
class NumericalGuardError : public Error {
 public:
  using Error::Error;
};

class WrapAroundError : public NumericalGuardError {
 public:
  using NumericalGuardError::NumericalGuardError;
};

class NearNodeError : public NumericalGuardError {
 public:
  using NumericalGuardError::NumericalGuardError;
};

class QuadratureError : public NumericalGuardError {
 public:
  using NumericalGuardError::NumericalGuardError;
};

}  // namespace pilotwave
