#include "gotu/md_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "gotu/errors.hpp"

namespace gotu {

namespace {

constexpr double kRankCutoff = 1e-10;
constexpr std::size_t kMaxSlack = 4096;
constexpr int kMaxDenseSolveDim = 20;

// Sequential lexicographic minimization on a k-dimensional cube.
// The interpolator family is c(t) = f_hat + D t where column u of D is the
// (unnormalized) transform of the indicator of unseen point u. For each
// degree from k down to 0 we minimize the degree's squared mass by least
// squares over the current affine feasible set and then restrict the set to
// the argmin subspace (null space of that stage, via SVD).
std::vector<double> sequential_md(std::vector<double> f_hat,
                                  const std::vector<Point>& unseen, int k) {
  const std::size_t m0 = unseen.size();
  if (m0 == 0) return f_hat;
  const std::size_t n = std::size_t{1} << k;

  std::vector<std::vector<Mask>> by_degree(k + 1);
  for (Mask t = 0; t < n; ++t) by_degree[set_size(t)].push_back(t);

  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(m0, m0);
  Eigen::VectorXd t0 = Eigen::VectorXd::Zero(m0);

  for (int deg = k; deg >= 0 && basis.cols() > 0; --deg) {
    const auto& rows = by_degree[deg];
    Eigen::MatrixXd d_rows(rows.size(), m0);
    Eigen::VectorXd rhs(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double current = f_hat[rows[r]];
      for (std::size_t u = 0; u < m0; ++u) {
        d_rows(r, u) = chi(rows[r], unseen[u]);
        current += d_rows(r, u) * t0(u);
      }
      rhs(r) = -current;
    }
    const Eigen::MatrixXd a = d_rows * basis;

    Eigen::VectorXd sigma;
    Eigen::MatrixXd u_thin, v_full;
    if (std::max(a.rows(), a.cols()) > 64) {
      Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
      sigma = svd.singularValues();
      u_thin = svd.matrixU();
      v_full = svd.matrixV();
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
      sigma = svd.singularValues();
      u_thin = svd.matrixU();
      v_full = svd.matrixV();
    }
    const double sigma_max = sigma.size() ? sigma(0) : 0.0;
    const double cutoff = kRankCutoff * sigma_max;
    Eigen::Index rank = 0;
    while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;

    if (rank > 0) {
      const Eigen::VectorXd step =
          v_full.leftCols(rank) *
          (u_thin.leftCols(rank).transpose() * rhs).cwiseQuotient(sigma.head(rank));
      t0 += basis * step;
    }
    basis = (basis * v_full.rightCols(v_full.cols() - rank)).eval();
  }

  for (Mask t = 0; t < n; ++t) {
    double acc = f_hat[t];
    for (std::size_t u = 0; u < m0; ++u) acc += chi(t, unseen[u]) * t0(u);
    f_hat[t] = acc;
  }
  return f_hat;
}

Mask expand_latent(Mask latent_subset, const std::vector<int>& latent_coords) {
  Mask out = 0;
  for (std::size_t j = 0; j < latent_coords.size(); ++j) {
    if ((latent_subset >> j) & 1u) out |= Mask{1} << latent_coords[j];
  }
  return out;
}

}  // namespace

InterpolatorSolution solve_md(const BooleanFunction& target,
                              const UnseenDomain& domain) {
  if (target.dim() != domain.dim()) {
    throw InvalidInput("target and domain dimensions differ");
  }
  const int d = target.dim();

  InterpolatorSolution sol;
  if (domain.unseen_count() == 0) {
    sol.md = target;
    sol.achieved_profile = degree_profile(target);
    sol.residual = 0.0;
    return sol;
  }

  Mask latent_mask = 0;
  std::vector<Point> latent_unseen;
  if (domain.latent_structure(&latent_mask, &latent_unseen) &&
      set_size(latent_mask) <= kMaxDenseSolveDim &&
      latent_unseen.size() <= kMaxSlack) {
    // U = {x : x_I in U*}: the interpolation constraint and each level of the
    // degree-profile split over the cosets chi_R, R disjoint from I, so the
    // stagewise minimization runs independently per coset on the latent cube.
    const int k = set_size(latent_mask);
    std::vector<int> latent_coords;
    for (int i = 0; i < d; ++i) {
      if ((latent_mask >> i) & 1u) latent_coords.push_back(i);
    }
    std::map<Mask, std::vector<double>> groups;  // R -> latent coefficients
    for (const auto& [t, c] : target.sparse_coeffs()) {
      const Mask r = t & ~latent_mask;
      auto [it, fresh] =
          groups.try_emplace(r, std::vector<double>(std::size_t{1} << k, 0.0));
      Mask s = 0;
      for (int j = 0; j < k; ++j) {
        if ((t >> latent_coords[j]) & 1u) s |= Mask{1} << j;
      }
      it->second[s] += c;
    }
    std::vector<std::pair<Mask, double>> md_terms;
    for (auto& [r, latent_hat] : groups) {
      const auto solved = sequential_md(std::move(latent_hat), latent_unseen, k);
      for (Mask s = 0; s < solved.size(); ++s) {
        if (solved[s] != 0.0) {
          md_terms.emplace_back(r | expand_latent(s, latent_coords), solved[s]);
        }
      }
    }
    sol.md = BooleanFunction::from_sparse_coeffs(d, md_terms);
  } else {
    if (d > kMaxDenseSolveDim) {
      throw BudgetError("dense MD solve refused: dimension " + std::to_string(d) +
                        " exceeds " + std::to_string(kMaxDenseSolveDim));
    }
    if (domain.unseen_count() > kMaxSlack) {
      throw BudgetError("dense MD solve refused: " +
                        std::to_string(domain.unseen_count()) +
                        " unseen points exceed the cap of " +
                        std::to_string(kMaxSlack));
    }
    sol.md = BooleanFunction::from_coeffs(
        d, sequential_md(target.coeffs(), domain.enumerate_unseen(), d));
  }

  sol.achieved_profile = degree_profile(sol.md);
  const auto& vt = target.values();
  const auto& vm = sol.md.values();
  double max_err = 0.0;
  for (Point p = 0; p < (Point{1} << d); ++p) {
    if (domain.is_unseen(p)) {
      sol.slack.push_back(vm[p] - vt[p]);
    } else {
      max_err = std::max(max_err, std::abs(vm[p] - vt[p]));
    }
  }
  sol.residual = max_err;
  return sol;
}

namespace {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

std::vector<double> oracle_solve(const BooleanFunction& target,
                                 const std::vector<Point>& unseen,
                                 double weight_base) {
  const int d = target.dim();
  const std::size_t n = std::size_t{1} << d;
  const std::size_t m = unseen.size();

  // min || W^(1/2) (f_hat + D t) ||^2 over the slack t, W = diag(M^|T|).
  LongMatrix b(n, m);
  LongVector rhs(n);
  std::vector<long double> weight(d + 1);
  for (int j = 0; j <= d; ++j) {
    weight[j] = std::pow(static_cast<long double>(weight_base),
                         static_cast<long double>(j) / 2.0L);
  }
  const auto& f_hat = target.coeffs();
  for (Mask t = 0; t < n; ++t) {
    const long double w = weight[set_size(t)];
    for (std::size_t u = 0; u < m; ++u) {
      b(t, u) = w * static_cast<long double>(chi(t, unseen[u]));
    }
    rhs(t) = -w * static_cast<long double>(f_hat[t]);
  }

  Eigen::JacobiSVD<LongMatrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma(sigma.size() - 1) <= 0.0L ||
      !std::isfinite(static_cast<double>(sigma(0))) ||
      sigma(0) / sigma(sigma.size() - 1) > 1e16L) {
    throw OracleUnstable("weighted-norm oracle is ill-conditioned at M = " +
                         std::to_string(weight_base));
  }
  const LongVector t_sol =
      svd.matrixV() * (svd.matrixU().transpose() * rhs).cwiseQuotient(sigma);

  std::vector<double> coeffs(n);
  for (Mask t = 0; t < n; ++t) {
    long double acc = f_hat[t];
    for (std::size_t u = 0; u < m; ++u) {
      acc += static_cast<long double>(chi(t, unseen[u])) * t_sol(u);
    }
    coeffs[t] = static_cast<double>(acc);
    if (!std::isfinite(coeffs[t])) {
      throw OracleUnstable("weighted-norm oracle produced non-finite values");
    }
  }
  return coeffs;
}

void check_oracle_budget(const BooleanFunction& target,
                         const UnseenDomain& domain) {
  if (target.dim() != domain.dim()) {
    throw InvalidInput("target and domain dimensions differ");
  }
  const std::size_t n = std::size_t{1} << target.dim();
  if (n * domain.unseen_count() > (std::size_t{1} << 24)) {
    throw BudgetError("oracle instance too large; use a smaller dimension");
  }
}

}  // namespace

BooleanFunction oracle_md(const BooleanFunction& target,
                          const UnseenDomain& domain, double weight_base) {
  if (weight_base < 10.0) {
    throw InvalidInput("oracle weight base must be >= 10");
  }
  check_oracle_budget(target, domain);
  if (domain.unseen_count() == 0) return target;
  return BooleanFunction::from_coeffs(
      target.dim(),
      oracle_solve(target, domain.enumerate_unseen(), weight_base));
}

OracleLimit oracle_md_limit(const BooleanFunction& target,
                            const UnseenDomain& domain) {
  check_oracle_budget(target, domain);
  if (domain.unseen_count() == 0) return {target, true};
  const auto unseen = domain.enumerate_unseen();

  // The weighted solution is rational in M and bounded, hence analytic in
  // x = 1/M at 0. Solve the anchor decades 1e2, 1e3, 1e4 plus half-decade
  // nodes and extrapolate each coefficient to x = 0 with the cubic through
  // the four largest weights; 1e2 only feeds the convergence flag.
  const double half = 3.1622776601683795;  // sqrt(10): half-decade step
  const std::vector<double> bases = {1e2, 1e2 * half, 1e3, 1e3 * half, 1e4};
  std::vector<std::vector<double>> solves;
  solves.reserve(bases.size());
  for (double m : bases) solves.push_back(oracle_solve(target, unseen, m));

  // Lagrange weights at zero over x = 1/M for the last four nodes
  std::array<double, 4> node{}, lw{};
  for (int i = 0; i < 4; ++i) node[i] = 1.0 / bases[i + 1];
  for (int i = 0; i < 4; ++i) {
    double w = 1.0;
    for (int j = 0; j < 4; ++j) {
      if (j != i) w *= node[j] / (node[j] - node[i]);
    }
    lw[i] = w;
  }

  const std::size_t n = solves.back().size();
  std::vector<double> limit(n);
  double d32 = 0.0, d43 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int r = 0; r < 4; ++r) acc += lw[r] * solves[r + 1][i];
    limit[i] = acc;
    d32 = std::max(d32, std::abs(solves[2][i] - solves[0][i]));
    d43 = std::max(d43, std::abs(solves[4][i] - solves[2][i]));
  }
  const bool converged = d43 <= 1e-12 || (d32 > 0.0 && d43 / d32 <= 0.3);
  return {BooleanFunction::from_coeffs(target.dim(), std::move(limit)),
          converged};
}

BooleanFunction restrict_to_latent(const BooleanFunction& f, Mask latent) {
  if (latent >= (Mask{1} << f.dim())) {
    throw InvalidInput("latent mask out of range");
  }
  std::vector<double> coeffs(f.coeffs());
  for (Mask t = 0; t < coeffs.size(); ++t) {
    if (t & ~latent) coeffs[t] = 0.0;
  }
  return BooleanFunction::from_coeffs(f.dim(), std::move(coeffs));
}

}  // namespace gotu
