#pragma once

#include <stdexcept>
#include <string>

namespace diagnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or unsupported schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or value outside a function's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The data cannot be strictly separated by a linear predictor.
class NonSeparableError : public Error {
 public:
  NonSeparableError() : Error("dataset is not linearly separable") {}
  using Error::Error;
};

/// Plain-mode loss or gradient underflowed to zero; normalized mode is required.
class UnderflowError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to reach its declared tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Every retry of a step was rejected; the step size underflowed.
class StepUnderflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace diagnet
