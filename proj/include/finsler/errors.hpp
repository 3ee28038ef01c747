#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point (or a finite-difference probe around it) left the coordinate patch.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A function returned NaN or infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a point where the object is not smooth or not invertible
/// (zero vector, ill-conditioned fundamental tensor).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Input data that makes the requested construction meaningless.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Adaptive step size collapsed below the floor.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

/// Newton shooting for exp_p^{-1} did not converge.
class InversionError : public Error {
 public:
  using Error::Error;
};

/// Distance chart could not be built or evaluated.
class ChartError : public Error {
 public:
  using Error::Error;
};

/// A map failed a precondition of an isometry / submetry diagnostic.
class MapError : public Error {
 public:
  using Error::Error;
};

/// Harness configuration is malformed or references unknown entities.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace finsler
