#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>

namespace gotu {

struct OdeOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double t_end = 1e5;
  double h_init = 1e-4;
  double h_min = 1e-13;
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

enum class OdeStatus { ReachedEnd, StoppedByObserver, MaxSteps };

using OdeRhs =
    std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;
// Called after every accepted step; returning true stops the integration.
using OdeObserver = std::function<bool(double, const Eigen::VectorXd&)>;

// Adaptive Dormand-Prince 5(4). Throws StiffnessError if the step underflows.
OdeStatus integrate_rk45(const OdeRhs& rhs, Eigen::VectorXd& y, double t0,
                         const OdeOptions& opts, const OdeObserver& observer);

}  // namespace gotu
