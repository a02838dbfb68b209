#pragma once

#include <stdexcept>
#include <string>

namespace sgwave {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: parameters, configuration, mismatched frames. CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The numerics could not deliver a trustworthy answer. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised by the polarisation fit when the asymmetry maps carry no
/// information on some component.
class DegenerateBasisError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sgwave
