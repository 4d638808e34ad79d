#pragma once

#include <stdexcept>
#include <string>

namespace geoloop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown catalog name.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Invalid arguments: dimension mismatch, non-positive steps, points outside a loop radius.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Connection coefficients are not finite at the requested point.
class EvaluationDomainError : public Error {
 public:
  using Error::Error;
};

/// Finite-difference failure: step underflow or non-finite samples.
class NumericsError : public Error {
 public:
  using Error::Error;
};

/// Parameter outside a sampled interval.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// An integrated trajectory left the chart domain.
class DomainExitError : public Error {
 public:
  explicit DomainExitError(double exit_time)
      : Error("trajectory left the chart domain at t=" + std::to_string(exit_time)), exit_time_(exit_time) {}

  double exit_time() const { return exit_time_; }

 private:
  double exit_time_;
};

/// Newton iteration did not reach its tolerance.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, double last_residual, int iterations)
      : Error(what + " (residual " + std::to_string(last_residual) + " after " + std::to_string(iterations) +
              " iterations)"),
        last_residual_(last_residual),
        iterations_(iterations) {}

  double last_residual() const { return last_residual_; }
  int iterations() const { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

}  // namespace geoloop
