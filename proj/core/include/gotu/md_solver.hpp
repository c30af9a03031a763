#pragma once

#include <vector>

#include "gotu/boolean_function.hpp"
#include "gotu/unseen_domain.hpp"

namespace gotu {

struct InterpolatorSolution {
  BooleanFunction md;
  std::vector<double> slack;  // over unseen points, ascending point order
  DegreeProfile achieved_profile;
  double residual = 0.0;  // max seen-set |md - target|
};

// Unique minimum-degree-profile interpolator of (target, domain). Minimizes
// the per-degree Fourier mass lexicographically from the top degree down over
// the affine family target + span{point indicators of unseen points}.
InterpolatorSolution solve_md(const BooleanFunction& target,
                              const UnseenDomain& domain);

// Independent oracle: solves the single quadratic program
//   min sum_T M^|T| c_T^2  subject to interpolation on the seen set,
// in extended precision. As M grows this converges to the MD interpolator.
BooleanFunction oracle_md(const BooleanFunction& target,
                          const UnseenDomain& domain, double weight_base);

struct OracleLimit {
  BooleanFunction limit;  // Richardson-extrapolated over M in {1e2, 1e3, 1e4}
  bool converged = false;
};
OracleLimit oracle_md_limit(const BooleanFunction& target,
                            const UnseenDomain& domain);

// Conditional average over the coordinates outside `latent`: keeps exactly
// the coefficients with support inside the latent set.
BooleanFunction restrict_to_latent(const BooleanFunction& f, Mask latent);

}  // namespace gotu
