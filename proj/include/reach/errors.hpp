#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reach {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: wrong dimension, violated precondition, malformed model.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure; the CLI maps these to exit status 1.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DivergedError : public NumericalError {
 public:
  DivergedError(std::size_t step, const std::string& what)
      : NumericalError(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class BudgetError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Singular linear system, e.g. a Lyapunov operator with λᵢ + λⱼ = 0.
class IllPosedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPsdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnderflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace reach
