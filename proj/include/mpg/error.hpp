#pragma once

#include <stdexcept>
#include <string>

namespace mpg {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two fields that must share dimensions do not.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A pointwise operation left its mathematical domain (ln of a nonpositive
/// entry, division by zero, ...). Inside a solver this means an invariant
/// broke upstream.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-facing configuration (non-positive weights, bad kinds, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable input/output files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed. Carries the outer iteration at which the
/// failure happened (0 when not applicable).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int iteration = 0)
      : Error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Conjugate gradient ran out of iterations.
class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : SolverError(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace mpg
