#pragma once

#include <stdexcept>
#include <string>

namespace adoptnet {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A weight matrix entry is negative (or not finite).
class NegativeWeightError : public Error {
public:
  using Error::Error;
};

/// A weight matrix row does not sum to one within tolerance.
class RowSumError : public Error {
public:
  using Error::Error;
};

/// The positive-entry digraph of a weight matrix is not strongly connected.
class NotStronglyConnectedError : public Error {
public:
  using Error::Error;
};

/// An iterative routine exhausted its iteration budget.
class NoConvergenceError : public Error {
public:
  using Error::Error;
};

/// A state left the unit box / simplex by more than floating-point dust.
class InvariantBreachError : public Error {
public:
  explicit InvariantBreachError(const std::string& msg, int step_index = -1)
      : Error(msg), step_index_(step_index) {}
  /// Step at which the breach occurred, -1 when outside a simulation loop.
  int step_index() const noexcept { return step_index_; }

private:
  int step_index_;
};

/// A linear system required by an equilibrium computation is singular.
class SingularSystemError : public Error {
public:
  using Error::Error;
};

/// A pointwise formula hit a zero denominator (degenerate rates).
class SingularDenominatorError : public Error {
public:
  using Error::Error;
};

/// Malformed input file (JSON / CSV).
class ParseError : public Error {
public:
  using Error::Error;
};

/// Structurally valid input with out-of-contract values.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A control synthesis problem has no feasible point.
class InfeasibleError : public Error {
public:
  using Error::Error;
};

/// Filesystem failure while reading or writing outputs.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace adoptnet
