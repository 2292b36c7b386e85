#pragma once

#include <stdexcept>
#include <string>

namespace nflab {

/// Base class for all library errors. `exit_code()` maps onto the CLI contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 3; }
};

/// Rejected input: bad parameters, schema violations, unknown keys.
class InvalidInput : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Requested truncation exceeds the configured memory bound or a supported mode.
class CapacityError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Non-convergent or non-finite numerics.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Two operators built on different spectral models were combined.
class ModelMismatch : public Error {
 public:
  using Error::Error;
};

/// An exact zero divisor met a nonzero numerator outside the resonant set.
class ResonanceViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace nflab
