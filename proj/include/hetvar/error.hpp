#pragma once

#include <stdexcept>
#include <string>

namespace hetvar {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong dimensions, out-of-range parameters.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// A VAR specification (or estimate) whose companion spectral radius is not below one.
class InstabilityError : public Error {
  public:
    using Error::Error;
};

/// A linear system whose reciprocal condition estimate fell below the tolerance.
class SingularMatrixError : public Error {
  public:
    using Error::Error;
};

/// A matrix required to be symmetric positive definite is not.
class NotPositiveDefiniteError : public Error {
  public:
    using Error::Error;
};

/// All kernel weights vanished for some t: the bandwidth is too small for T.
class DegenerateBandwidthError : public Error {
  public:
    using Error::Error;
};

/// Input data could not be parsed or has the wrong shape.
class DataError : public Error {
  public:
    using Error::Error;
};

}  // namespace hetvar
