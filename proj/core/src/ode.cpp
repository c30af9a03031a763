#include "gotu/ode.hpp"

#include <algorithm>
#include <cmath>

#include "gotu/errors.hpp"

namespace gotu {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

OdeStatus integrate_rk45(const OdeRhs& rhs, Eigen::VectorXd& y, double t0,
                         const OdeOptions& opts, const OdeObserver& observer) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y_new(n),
      tmp(n), err(n);

  double t = t0;
  double h = std::min(opts.h_init, opts.t_end - t);
  rhs(t, y, k1);  // FSAL seed

  for (std::size_t step = 0; step < opts.max_steps; ++step) {
    if (t >= opts.t_end) return OdeStatus::ReachedEnd;
    h = std::min(h, opts.t_end - t);
    if (h < opts.h_min * std::max(1.0, std::abs(t))) {
      throw StiffnessError("step size underflow at t = " + std::to_string(t), t);
    }

    tmp = y + h * (a21 * k1);
    rhs(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, tmp, k6);
    y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, y_new, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double scaled = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale =
          opts.abs_tol +
          opts.rel_tol * std::max(std::abs(y(i)), std::abs(y_new(i)));
      const double q = err(i) / scale;
      scaled += q * q;
    }
    const double err_norm = std::sqrt(scaled / static_cast<double>(n));

    if (err_norm <= 1.0 || h <= opts.h_min * std::max(1.0, std::abs(t)) * 2.0) {
      t += h;
      y.swap(y_new);
      k1.swap(k7);  // FSAL
      if (observer && observer(t, y)) return OdeStatus::StoppedByObserver;
      if (t >= opts.t_end) return OdeStatus::ReachedEnd;
    }
    const double factor =
        (err_norm > 0.0)
            ? std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0)
            : 5.0;
    h = std::min(h * factor, opts.h_max);
  }
  return OdeStatus::MaxSteps;
}

}  // namespace gotu
