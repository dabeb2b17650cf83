#pragma once

#include <stdexcept>
#include <string>

namespace amdyn {

/// Raised when a caller breaks a documented precondition (bad flag, bad shape, bad index).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot produce a trustworthy number.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A covariance that should be PSD could not be factorized even with the largest jitter.
class PsdFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// A fixed-point iteration ran out of its iteration budget.
class ConvergenceFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

}  // namespace amdyn
