#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gotu/boolean_function.hpp"
#include "gotu/unseen_domain.hpp"

namespace gotu {

class Activation {
 public:
  enum class Kind { ReLU, PolynomialPower, Square, Custom };

  static Activation relu() { return Activation(Kind::ReLU, 0); }
  // sigma(z) = (1 + z)^k
  static Activation polynomial_power(int k);
  static Activation square() { return Activation(Kind::Square, 0); }
  // tabulated values with linear interpolation/extrapolation
  static Activation custom(std::vector<double> grid, std::vector<double> table);

  double operator()(double z) const;
  Kind kind() const { return kind_; }
  int power() const { return power_; }
  std::string name() const;

 private:
  Activation(Kind kind, int power) : kind_(kind), power_(power) {}
  Kind kind_;
  int power_;
  std::vector<double> grid_, table_;
};

// f_RF(x) = N^{-1/2} sum_i a_i sigma(<w_i, x> + b_i); w, b ~ N(0, 1/d) fixed
// at construction, a trainable from zero.
struct RFModel {
  int d = 0;
  int n_features = 0;
  Eigen::MatrixXd w;  // n_features x d
  Eigen::VectorXd b;  // n_features
  Eigen::VectorXd a;  // n_features, init 0
  Activation act = Activation::relu();
};

RFModel make_rf_model(int d, int n_features, const Activation& act,
                      std::uint64_t seed);

Eigen::MatrixXd points_to_matrix(int d, std::span<const Point> points);

// batch evaluation; x is (n x d) with +-1 entries
Eigen::VectorXd rf_eval(const RFModel& model, const Eigen::MatrixXd& x);

enum class FitMethod { Direct, GradientDescent, ConjugateGradient };

struct FitOptions {
  FitMethod method = FitMethod::ConjugateGradient;
  double tol = 1e-6;                // training max-error target
  std::size_t max_steps = 1000000;  // gradient-descent step cap
  std::size_t max_cg_iters = 4000;
  double cg_gradient_tol = 1e-9;  // relative normal-equation residual
  bool throw_on_budget = true;
};

struct FitReport {
  double max_error = 0.0;
  double rms_error = 0.0;
  std::size_t iterations = 0;
};

// Interpolates (or least-squares fits) the labels on the seen points with the
// minimum-norm coefficient vector a. Direct uses an SVD pseudo-inverse;
// GradientDescent runs plain descent from a = 0 with step 1/sigma_max^2 from
// 20 power iterations; ConjugateGradient runs CGLS from a = 0, which
// converges to the same min-norm point with far fewer passes.
FitReport fit_min_norm(RFModel& model, std::span<const Point> seen,
                       std::span<const double> labels,
                       const FitOptions& opts = {});

// exact full-cube transform of the fitted model (d <= 20)
std::vector<std::pair<Mask, double>> extract_fourier_exact(const RFModel& model,
                                                           double eps = 1e-10);
double rf_coefficient_exact(const RFModel& model, Mask t);

struct SampledCoeff {
  Mask mask = 0;
  double estimate = 0.0;
  double std_error = 0.0;
};
std::vector<SampledCoeff> extract_fourier_sampled(const RFModel& model,
                                                  const std::vector<Mask>& masks,
                                                  std::size_t n_samples,
                                                  std::uint64_t seed);

// ---- two-term leakage tasks ----

struct LeakageTask {
  std::string name;
  int dim = 0;
  BooleanFunction target;
  UnseenDomain domain;
  Mask high_monomial = 0;
  double high_target_coeff = 1.0;
  std::vector<std::pair<Mask, double>> md_terms;  // the pure MD interpolator
};

// names: parity2-pattern, parity4-frozen, parityk-frozen (k = extra argument)
LeakageTask make_leakage_task(const std::string& name, int dim, int k = 4);

struct LeakageReport {
  double alpha_leak = 0.0;
  std::map<Mask, double> md_coeffs;
  std::map<Mask, double> high_coeffs;
  double residual = 0.0;  // fit of learned coeffs to (1-a) MD + a target
};

LeakageReport leakage(const std::vector<std::pair<Mask, double>>& learned,
                      const LeakageTask& task);

// ---- activation diagnostics ----

// normalized probabilists' Hermite coefficients of orders 0..p via 128-node
// Gauss-Hermite quadrature
std::vector<double> hermite_coeffs(const Activation& act, int p);
bool is_strongly_expressive(const Activation& act, int p);

struct SpectrumRow {
  int d = 0;
  int t_size = 0;
  double estimate = 0.0;   // Monte Carlo mean of phi_hat(T)^2
  double std_error = 0.0;
};
struct SpectrumTable {
  std::vector<SpectrumRow> rows;
  std::map<int, double> slope_per_size;  // log-log slope of estimate vs d
  double cross_term_mean = 0.0;          // E[phi_hat({0}) phi_hat({1})]
  double cross_term_std_error = 0.0;
};
SpectrumTable feature_spectrum_scaling(const Activation& act,
                                       const std::vector<int>& dims,
                                       const std::vector<int>& t_sizes,
                                       int trials, std::uint64_t seed);

// ---- ReLU asymmetry experiment: x0x1x2 + x0x3x4x5 with x0 frozen ----

struct ParityAsymmetryReport {
  std::map<Mask, double> relu_coeffs;  // x1x2, x0x1x2, x3x4x5, x0x3x4x5
  std::map<Mask, double> poly_coeffs;
  double relu_fit_error = 0.0;
  double poly_fit_error = 0.0;
};
ParityAsymmetryReport relu_parity_asymmetry(int d, int n_features,
                                            std::uint64_t seed,
                                            const FitOptions& opts = {});

inline constexpr Mask kAsymMaskLow = 0b110;        // x1x2
inline constexpr Mask kAsymMaskLowHigh = 0b111;    // x0x1x2
inline constexpr Mask kAsymMaskOdd = 0b111000;     // x3x4x5
inline constexpr Mask kAsymMaskOddHigh = 0b111001; // x0x3x4x5

}  // namespace gotu
