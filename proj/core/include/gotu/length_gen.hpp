#pragma once

#include <cstdint>

#include "gotu/boolean_function.hpp"

namespace gotu {

struct BallInterpolator {
  int radius = 0;
  BooleanFunction g;  // degree <= radius, equal to the source on B_radius
  enum class Source { ClosedForm, LinearSolve } source = Source::ClosedForm;
  double residual = 0.0;            // linear-solve residual on the ball
  double condition_estimate = 0.0;  // 1-norm condition estimate of the system
};

// Closed-form degree-r equivalent of the degree-k parity on B_r:
//   g = sum over T in [k], |T| <= r of prod_{i in T}(x_i - 1),
// whose constant term is (-1)^r C(k-1, r).
BallInterpolator parity_ball_equivalent(int k, int r, int d);

// Exact signed binomial bias of the parity ball interpolator, in integers.
long long parity_ball_bias(int k, int r);

// Unique degree-<=r interpolator of f on B_r via the square linear system
// over the degree-<=r monomial basis.
BallInterpolator ball_interpolate(const BooleanFunction& f, int r);

struct GotuBound {
  double gotu = 0.0;   // full-cube mean squared error of the ball interpolator
  double bound = 0.0;  // C(k-1, r)^2
  long long bias = 0;  // (-1)^r C(k-1, r), exact
  bool pass = false;   // gotu strictly exceeds the bound
};
GotuBound gotu_bound_check(int k, int r, int d);

}  // namespace gotu
