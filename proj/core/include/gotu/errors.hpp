#pragma once

#include <stdexcept>
#include <string>

namespace gotu {

// Arguments violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The domain kind carries no closed-form structure for the requested operation.
class UnsupportedDomain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact computation refused: it would exceed the dense-storage or runtime caps.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solver exhausted its budget before reaching the target residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

// The weighted-norm oracle became numerically unreliable at the requested weight.
class OracleUnstable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training loss blew past the divergence threshold.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long step)
      : std::runtime_error(what), step(step) {}
  long step;
};

// The adaptive integrator underflowed its step size.
class StiffnessError : public std::runtime_error {
 public:
  StiffnessError(const std::string& what, double t_reached)
      : std::runtime_error(what), t_reached(t_reached) {}
  double t_reached;
};

// A mathematical guarantee failed; indicates a bug, not bad input.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Overflow or non-finite value in a numeric routine.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gotu
