#include "gotu/length_gen.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "gotu/errors.hpp"

namespace gotu {

namespace {

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long out = 1;
  for (int j = 0; j < k; ++j) out = out * (n - j) / (j + 1);
  return out;
}

void check_kr(int k, int r, int d) {
  if (d < 1 || d > kMaxDenseDim) throw InvalidInput("dimension out of range");
  if (k < 1 || k > d) throw InvalidInput("parity degree k must be in [1, d]");
  if (r < 0) throw InvalidInput("radius must be >= 0");
  if (r >= k) {
    throw InvalidInput("radius >= parity degree: the target already has degree <= r");
  }
}

}  // namespace

long long parity_ball_bias(int k, int r) {
  long long b = binomial(k - 1, r);
  return (r % 2) ? -b : b;
}

BallInterpolator parity_ball_equivalent(int k, int r, int d) {
  check_kr(k, r, d);
  // The sum telescopes per subset size: the coefficient on S only depends on
  // |S| and equals (-1)^(r-|S|) C(k-|S|-1, r-|S|).
  std::vector<std::pair<Mask, double>> terms;
  for (Mask s = 0; s < (Mask{1} << k); ++s) {
    const int sz = set_size(s);
    if (sz > r) continue;
    long long c = binomial(k - sz - 1, r - sz);
    if ((r - sz) % 2) c = -c;
    if (c != 0) terms.emplace_back(s, static_cast<double>(c));
  }
  BallInterpolator out;
  out.radius = r;
  out.source = BallInterpolator::Source::ClosedForm;
  out.g = BooleanFunction::from_sparse_coeffs(d, terms);
  return out;
}

BallInterpolator ball_interpolate(const BooleanFunction& f, int r) {
  const int d = f.dim();
  if (d > 18) throw BudgetError("ball interpolation capped at dimension 18");
  if (r < 0) throw InvalidInput("radius must be >= 0");
  const int radius = std::min(r, d);

  std::vector<Point> points;
  std::vector<Mask> masks;
  for (Point p = 0; p < (Point{1} << d); ++p) {
    if (std::popcount(p) <= radius) {
      points.push_back(p);
      masks.push_back(p);  // same popcount filter enumerates the monomials
    }
  }
  const std::size_t n = points.size();
  if (n > 8192) {
    throw BudgetError("ball system of size " + std::to_string(n) +
                      " exceeds the dense cap");
  }

  Eigen::MatrixXd m(n, n);
  Eigen::VectorXd rhs(n);
  const auto& values = f.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = chi(masks[j], points[i]);
    rhs(i) = values[points[i]];
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  Eigen::VectorXd a = lu.solve(rhs);
  a += lu.solve(rhs - m * a);  // one step of iterative refinement

  const double residual = (m * a - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-8)) {
    // rank(M) = |B_r| is guaranteed, so this is a bug, not an input problem
    throw InternalError("ball interpolation residual " +
                        std::to_string(residual) + " exceeds 1e-8");
  }

  // crude 1-norm condition estimate: ||M||_1 * ||M^-1 e||_1 on a probe vector
  Eigen::VectorXd probe = Eigen::VectorXd::Ones(n) / static_cast<double>(n);
  const double inv_norm = lu.solve(probe).cwiseAbs().sum();
  double m_norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    m_norm = std::max(m_norm, m.col(j).cwiseAbs().sum());
  }

  BallInterpolator out;
  out.radius = radius;
  out.source = BallInterpolator::Source::LinearSolve;
  out.residual = residual;
  out.condition_estimate = m_norm * inv_norm;
  std::vector<std::pair<Mask, double>> terms;
  for (std::size_t j = 0; j < n; ++j) {
    if (a(j) != 0.0) terms.emplace_back(masks[j], a(j));
  }
  out.g = BooleanFunction::from_sparse_coeffs(d, terms);
  return out;
}

GotuBound gotu_bound_check(int k, int r, int d) {
  check_kr(k, r, d);
  GotuBound out;
  out.bias = parity_ball_bias(k, r);
  out.bound = static_cast<double>(out.bias) * static_cast<double>(out.bias);

  // Parseval: the test loss is the squared coefficient distance between the
  // ball interpolator and the parity. The parity's single coefficient sits on
  // [k] (degree k > r), so it contributes exactly 1.
  double gotu = 1.0;
  for (int sz = 0; sz <= r; ++sz) {
    const double c = static_cast<double>(binomial(k - sz - 1, r - sz));
    gotu += static_cast<double>(binomial(k, sz)) * c * c;
  }
  out.gotu = gotu;
  out.pass = gotu > out.bound * (1.0 - 1e-9);
  return out;
}

}  // namespace gotu
