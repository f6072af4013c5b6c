#pragma once

#include <stdexcept>
#include <string>

namespace toric_flow {

/// Non-finite or malformed numerical input.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value left the representable range (e.g. exp(sA) overflowed).
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// An operation was called outside its domain of validity.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The implicit step equations did not converge.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, double residual, double time)
      : std::runtime_error(what), residual_(residual), time_(time) {}

  double residual() const noexcept { return residual_; }
  double time() const noexcept { return time_; }

 private:
  double residual_;
  double time_;
};

/// Separatrix or otherwise non-simple turning points.
class DegenerateOrbit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace toric_flow
