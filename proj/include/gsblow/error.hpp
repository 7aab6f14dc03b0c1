#pragma once

#include <stdexcept>
#include <string>

namespace gsblow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A potential is not strictly positive where it must be.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// The spectral parameter sits on an eigenvalue of the problem.
class PoleError : public Error {
 public:
  PoleError(const std::string& what, int component = 0)
      : Error(what), component_(component) {}
  /// Index (1 or 2) of the decoupled equation that hit its pole, 0 for scalar solves.
  int component() const noexcept { return component_; }

 private:
  int component_;
};

/// The spectral parameter reached the second eigenvalue, where the
/// operator restricted to the ground-state complement stops being definite.
class DeflationError : public Error {
 public:
  using Error::Error;
};

/// The coupling matrix has a double eigenvalue with a = d.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace gsblow
