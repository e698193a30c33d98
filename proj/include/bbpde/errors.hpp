#pragma once

#include <stdexcept>
#include <string>

namespace bbpde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A linear solve did not reach the requested tolerance.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double residual)
      : Error(what + " (relative residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Factorization or CG detected a non-positive pivot / curvature.
class MatrixNotSpd : public Error {
 public:
  using Error::Error;
};

/// Newton iteration of an implicit time step failed.
class NonlinearSolverFailure : public Error {
 public:
  NonlinearSolverFailure(const std::string& what, int step, double residual)
      : Error(what + " at time step " + std::to_string(step) + " (residual " +
              std::to_string(residual) + ")"),
        step_(step),
        residual_(residual) {}
  int step() const noexcept { return step_; }
  double residual() const noexcept { return residual_; }

 private:
  int step_;
  double residual_;
};

/// (S,S)_W vanished, so no BB quotient exists.
class DegenerateStep : public Error {
 public:
  using Error::Error;
};

/// (S,Y)_W <= 0 with no safeguard configured.
class Nonconvexity : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bbpde
