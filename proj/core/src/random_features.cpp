#include "gotu/random_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gotu/errors.hpp"
#include "gotu/rng.hpp"

namespace gotu {

// ---------------------------------------------------------------- activation

Activation Activation::polynomial_power(int k) {
  if (k < 1) throw InvalidInput("polynomial power must be >= 1");
  return Activation(Kind::PolynomialPower, k);
}

Activation Activation::custom(std::vector<double> grid,
                              std::vector<double> table) {
  if (grid.size() < 2 || grid.size() != table.size()) {
    throw InvalidInput("custom activation needs matched grid/table, size >= 2");
  }
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw InvalidInput("custom activation grid must be ascending");
  }
  Activation a(Kind::Custom, 0);
  a.grid_ = std::move(grid);
  a.table_ = std::move(table);
  return a;
}

double Activation::operator()(double z) const {
  switch (kind_) {
    case Kind::ReLU:
      return z > 0.0 ? z : 0.0;
    case Kind::PolynomialPower: {
      double base = 1.0 + z;
      double out = 1.0;
      for (int i = 0; i < power_; ++i) out *= base;
      return out;
    }
    case Kind::Square:
      return z * z;
    case Kind::Custom: {
      // linear interpolation, linear extrapolation from the edge segments
      const auto& g = grid_;
      std::size_t hi = std::upper_bound(g.begin(), g.end(), z) - g.begin();
      hi = std::clamp<std::size_t>(hi, 1, g.size() - 1);
      const double t = (z - g[hi - 1]) / (g[hi] - g[hi - 1]);
      return table_[hi - 1] + t * (table_[hi] - table_[hi - 1]);
    }
  }
  return 0.0;
}

std::string Activation::name() const {
  switch (kind_) {
    case Kind::ReLU: return "relu";
    case Kind::PolynomialPower: return "poly" + std::to_string(power_);
    case Kind::Square: return "square";
    case Kind::Custom: return "custom";
  }
  return "?";
}

// ---------------------------------------------------------------- model

RFModel make_rf_model(int d, int n_features, const Activation& act,
                      std::uint64_t seed) {
  if (d < 1) throw InvalidInput("input dimension must be >= 1");
  if (n_features < 1) throw InvalidInput("feature count must be >= 1");
  RFModel m;
  m.d = d;
  m.n_features = n_features;
  m.act = act;
  m.w.resize(n_features, d);
  m.b.resize(n_features);
  m.a = Eigen::VectorXd::Zero(n_features);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  // fixed stream layout: per feature, d weights then the bias
  for (int i = 0; i < n_features; ++i) {
    for (int j = 0; j < d; ++j) m.w(i, j) = rng.gaussian() * scale;
    m.b(i) = rng.gaussian() * scale;
  }
  return m;
}

Eigen::MatrixXd points_to_matrix(int d, std::span<const Point> points) {
  Eigen::MatrixXd x(points.size(), d);
  for (std::size_t r = 0; r < points.size(); ++r) {
    for (int j = 0; j < d; ++j) x(r, j) = coordinate(points[r], j);
  }
  return x;
}

namespace {

constexpr std::size_t kDoubleEntriesCap = 40'000'000;   // ~320 MB
constexpr std::size_t kFloatEntriesCap = 400'000'000;   // ~1.6 GB
constexpr std::size_t kBlockRows = 4096;

// Feature matrix Phi (n x N), entries sigma(<w_i, x> + b_i)/sqrt(N); stored in
// double when small, float above kDoubleEntriesCap.
struct FeatureOperator {
  FeatureOperator(const RFModel& m, const Eigen::MatrixXd& x) {
    const std::size_t entries =
        static_cast<std::size_t>(x.rows()) * static_cast<std::size_t>(m.n_features);
    if (entries > kFloatEntriesCap) {
      throw BudgetError("feature matrix of " + std::to_string(entries) +
                        " entries exceeds the memory cap");
    }
    use_float = entries > kDoubleEntriesCap;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(m.n_features));
    if (use_float) {
      phi_f.resize(x.rows(), m.n_features);
    } else {
      phi_d.resize(x.rows(), m.n_features);
    }
    for (Eigen::Index r0 = 0; r0 < x.rows();
         r0 += static_cast<Eigen::Index>(kBlockRows)) {
      const Eigen::Index rows =
          std::min<Eigen::Index>(kBlockRows, x.rows() - r0);
      Eigen::MatrixXd z = x.middleRows(r0, rows) * m.w.transpose();
      z.rowwise() += m.b.transpose();
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
          z(r, c) = m.act(z(r, c)) * inv_sqrt_n;
        }
      }
      if (use_float) {
        phi_f.middleRows(r0, rows) = z.cast<float>();
      } else {
        phi_d.middleRows(r0, rows) = z;
      }
    }
  }

  Eigen::Index rows() const { return use_float ? phi_f.rows() : phi_d.rows(); }
  Eigen::Index cols() const { return use_float ? phi_f.cols() : phi_d.cols(); }

  Eigen::VectorXd mul(const Eigen::VectorXd& a) const {
    if (use_float) return (phi_f * a.cast<float>()).cast<double>();
    return phi_d * a;
  }
  Eigen::VectorXd tmul(const Eigen::VectorXd& r) const {
    if (use_float) return (phi_f.transpose() * r.cast<float>()).cast<double>();
    return phi_d.transpose() * r;
  }

  bool use_float = false;
  Eigen::MatrixXd phi_d;
  Eigen::MatrixXf phi_f;
};

FitReport finish_report(const Eigen::VectorXd& residual, std::size_t iters) {
  FitReport rep;
  rep.max_error = residual.size() ? residual.cwiseAbs().maxCoeff() : 0.0;
  rep.rms_error = residual.size()
                      ? std::sqrt(residual.squaredNorm() /
                                  static_cast<double>(residual.size()))
                      : 0.0;
  rep.iterations = iters;
  return rep;
}

}  // namespace

Eigen::VectorXd rf_eval(const RFModel& model, const Eigen::MatrixXd& x) {
  const double inv_sqrt_n =
      1.0 / std::sqrt(static_cast<double>(model.n_features));
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index r0 = 0; r0 < x.rows();
       r0 += static_cast<Eigen::Index>(kBlockRows)) {
    const Eigen::Index rows = std::min<Eigen::Index>(kBlockRows, x.rows() - r0);
    Eigen::MatrixXd z = x.middleRows(r0, rows) * model.w.transpose();
    z.rowwise() += model.b.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < z.cols(); ++c) z(r, c) = model.act(z(r, c));
    }
    out.segment(r0, rows) = z * model.a * inv_sqrt_n;
  }
  return out;
}

FitReport fit_min_norm(RFModel& model, std::span<const Point> seen,
                       std::span<const double> labels, const FitOptions& opts) {
  if (seen.empty()) throw InvalidInput("seen point set is empty");
  if (seen.size() != labels.size()) {
    throw InvalidInput("labels must match the seen points");
  }
  const Eigen::MatrixXd x = points_to_matrix(model.d, seen);
  const Eigen::Map<const Eigen::VectorXd> y(labels.data(), labels.size());
  const FeatureOperator phi(model, x);

  if (opts.method == FitMethod::Direct) {
    const std::size_t entries =
        static_cast<std::size_t>(phi.rows()) * static_cast<std::size_t>(phi.cols());
    if (phi.use_float || entries > 25'000'000) {
      throw BudgetError("direct SVD fit too large; use an iterative method");
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(phi.phi_d,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    const double cutoff = sigma.size() ? 1e-12 * sigma(0) : 0.0;
    Eigen::VectorXd scaled = svd.matrixU().transpose() * y;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      scaled(i) = sigma(i) > cutoff ? scaled(i) / sigma(i) : 0.0;
    }
    model.a = svd.matrixV() * scaled;
    return finish_report(phi.mul(model.a) - y, 1);
  }

  if (opts.method == FitMethod::GradientDescent) {
    // step size 1/sigma_max^2 with sigma_max estimated by 20 power iterations
    Rng prng(0x9e3779b97f4a7c15ULL);
    Eigen::VectorXd v(phi.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = prng.gaussian();
    v.normalize();
    double lambda = 1.0;
    for (int it = 0; it < 20; ++it) {
      Eigen::VectorXd next = phi.tmul(phi.mul(v));
      lambda = next.norm();
      if (lambda == 0.0) break;
      v = next / lambda;
    }
    const double step = lambda > 0.0 ? 1.0 / lambda : 1.0;

    model.a.setZero();
    Eigen::VectorXd residual = -y;
    for (std::size_t iter = 1; iter <= opts.max_steps; ++iter) {
      model.a -= step * phi.tmul(residual);
      residual = phi.mul(model.a) - y;
      if (iter % 16 == 0 || iter == opts.max_steps) {
        if (residual.cwiseAbs().maxCoeff() <= opts.tol) {
          return finish_report(residual, iter);
        }
      }
    }
    const double res = residual.cwiseAbs().maxCoeff();
    throw ConvergenceError("gradient descent exhausted " +
                               std::to_string(opts.max_steps) +
                               " steps; max residual " + std::to_string(res),
                           res);
  }

  // CGLS from a = 0: iterates stay in range(Phi^T), so the limit is the same
  // minimum-norm point gradient descent reaches.
  model.a.setZero();
  Eigen::VectorXd residual = y;  // y - Phi a
  Eigen::VectorXd s = phi.tmul(residual);
  Eigen::VectorXd p = s;
  const double s0_norm = s.norm();
  double gamma = s.squaredNorm();
  std::size_t iter = 0;
  bool gradient_converged = s0_norm == 0.0;
  while (!gradient_converged && iter < opts.max_cg_iters) {
    ++iter;
    const Eigen::VectorXd q = phi.mul(p);
    const double qq = q.squaredNorm();
    if (qq == 0.0) break;
    const double alpha = gamma / qq;
    model.a += alpha * p;
    residual -= alpha * q;
    s = phi.tmul(residual);
    const double gamma_new = s.squaredNorm();
    if (std::sqrt(gamma_new) <= opts.cg_gradient_tol * s0_norm) {
      gradient_converged = true;
      break;
    }
    p = s + (gamma_new / gamma) * p;
    gamma = gamma_new;
  }
  const Eigen::VectorXd final_residual = phi.mul(model.a) - y;
  const double max_err = final_residual.cwiseAbs().maxCoeff();
  if (!gradient_converged && max_err > opts.tol && opts.throw_on_budget) {
    throw ConvergenceError("conjugate gradient exhausted " +
                               std::to_string(opts.max_cg_iters) +
                               " iterations; max residual " +
                               std::to_string(max_err),
                           max_err);
  }
  return finish_report(final_residual, iter);
}

std::vector<std::pair<Mask, double>> extract_fourier_exact(const RFModel& model,
                                                           double eps) {
  if (model.d > 20) {
    throw BudgetError("exact extraction requires dimension <= 20");
  }
  const std::size_t n = std::size_t{1} << model.d;
  std::vector<double> values(n);
  std::vector<Point> block;
  block.reserve(kBlockRows);
  for (std::size_t start = 0; start < n; start += kBlockRows) {
    const std::size_t rows = std::min(kBlockRows, n - start);
    block.clear();
    for (std::size_t i = 0; i < rows; ++i) block.push_back(start + i);
    const Eigen::VectorXd out =
        rf_eval(model, points_to_matrix(model.d, block));
    for (std::size_t i = 0; i < rows; ++i) values[start + i] = out(i);
  }
  const auto coeffs = transform(std::move(values));
  std::vector<std::pair<Mask, double>> sparse;
  for (Mask t = 0; t < coeffs.size(); ++t) {
    if (std::abs(coeffs[t]) > eps) sparse.emplace_back(t, coeffs[t]);
  }
  return sparse;
}

double rf_coefficient_exact(const RFModel& model, Mask t) {
  if (model.d > 20) {
    throw BudgetError("exact extraction requires dimension <= 20");
  }
  const std::size_t n = std::size_t{1} << model.d;
  double acc = 0.0;
  std::vector<Point> block;
  for (std::size_t start = 0; start < n; start += kBlockRows) {
    const std::size_t rows = std::min(kBlockRows, n - start);
    block.clear();
    for (std::size_t i = 0; i < rows; ++i) block.push_back(start + i);
    const Eigen::VectorXd out =
        rf_eval(model, points_to_matrix(model.d, block));
    for (std::size_t i = 0; i < rows; ++i) acc += chi(t, start + i) * out(i);
  }
  return acc / static_cast<double>(n);
}

std::vector<SampledCoeff> extract_fourier_sampled(const RFModel& model,
                                                  const std::vector<Mask>& masks,
                                                  std::size_t n_samples,
                                                  std::uint64_t seed) {
  if (n_samples < 2) throw InvalidInput("need at least two samples");
  Rng rng(seed);
  const Point cube_mask = (model.d >= 62) ? ~Point{0} : ((Point{1} << model.d) - 1);
  std::vector<Point> pts(n_samples);
  for (auto& p : pts) p = rng.bits() & cube_mask;
  const Eigen::VectorXd f = rf_eval(model, points_to_matrix(model.d, pts));

  std::vector<SampledCoeff> out;
  out.reserve(masks.size());
  for (Mask t : masks) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double v = chi(t, pts[i]) * f(i);
      const double delta = v - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(n_samples - 1);
    out.push_back({t, mean, std::sqrt(var / static_cast<double>(n_samples))});
  }
  return out;
}

// ---------------------------------------------------------------- leakage

LeakageTask make_leakage_task(const std::string& name, int dim, int k) {
  LeakageTask task{name,
                   dim,
                   BooleanFunction(),
                   UnseenDomain(dim, BallComplement{dim}),
                   0,
                   1.0,
                   {}};
  if (name == "parity2-pattern") {
    if (dim < 2) throw InvalidInput("parity2-pattern needs dimension >= 2");
    task.target = make_parity(dim, 0b11);
    task.domain = UnseenDomain(dim, FrozenPattern{{0, 1}, {-1, -1}});
    task.high_monomial = 0b11;
    task.md_terms = {{0, -1.0}, {0b01, 1.0}, {0b10, 1.0}};
  } else if (name == "parity4-frozen") {
    if (dim < 4) throw InvalidInput("parity4-frozen needs dimension >= 4");
    task.target = make_parity(dim, 0b1111);
    task.domain = UnseenDomain(dim, FrozenPattern{{0}, {-1}});
    task.high_monomial = 0b1111;
    task.md_terms = {{0b1110, 1.0}};
  } else if (name == "parityk-frozen") {
    if (k < 2 || dim < k) throw InvalidInput("parityk-frozen needs 2 <= k <= d");
    const Mask full = (Mask{1} << k) - 1;
    task.target = make_parity(dim, full);
    task.domain = UnseenDomain(dim, FrozenPattern{{0}, {-1}});
    task.high_monomial = full;
    task.md_terms = {{full & ~Mask{1}, 1.0}};
  } else {
    throw InvalidInput("unknown leakage task '" + name + "'");
  }
  return task;
}

LeakageReport leakage(const std::vector<std::pair<Mask, double>>& learned,
                      const LeakageTask& task) {
  std::map<Mask, double> lookup(learned.begin(), learned.end());
  const auto get = [&](Mask t) {
    auto it = lookup.find(t);
    return it == lookup.end() ? 0.0 : it->second;
  };
  LeakageReport rep;
  rep.alpha_leak = get(task.high_monomial) / task.high_target_coeff;
  for (const auto& [t, c] : task.md_terms) rep.md_coeffs[t] = get(t);
  rep.high_coeffs[task.high_monomial] = get(task.high_monomial);

  std::map<Mask, double> family;
  for (const auto& [t, c] : task.md_terms) {
    family[t] += (1.0 - rep.alpha_leak) * c;
  }
  for (const auto& [t, c] : task.target.sparse_coeffs()) {
    family[t] += rep.alpha_leak * c;
  }
  double residual = 0.0;
  for (const auto& [t, predicted] : family) {
    residual = std::max(residual, std::abs(get(t) - predicted));
  }
  rep.residual = residual;
  return rep;
}

// ---------------------------------------------------------------- diagnostics

namespace {

// 128-node Gauss-Hermite rule (weight e^{-t^2}) via Golub-Welsch
void gauss_hermite(int n, Eigen::VectorXd* nodes, Eigen::VectorXd* weights) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(i / 2.0);
    jac(i, i - 1) = off;
    jac(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  *nodes = es.eigenvalues();
  weights->resize(n);
  const double sqrt_pi = std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    const double v = es.eigenvectors()(0, i);
    (*weights)(i) = sqrt_pi * v * v;
  }
}

}  // namespace

std::vector<double> hermite_coeffs(const Activation& act, int p) {
  if (p < 0 || p > 10) throw InvalidInput("Hermite order cap is 10");
  constexpr int kNodes = 128;
  Eigen::VectorXd t, w;
  gauss_hermite(kNodes, &t, &w);

  // c_k = E_{g~N(0,1)}[sigma(g) he_k(g)], he_k = He_k / sqrt(k!)
  std::vector<double> coeffs(p + 1, 0.0);
  for (int i = 0; i < kNodes; ++i) {
    const double g = std::sqrt(2.0) * t(i);
    const double sig = act(g);
    const double quad_w = w(i) / std::sqrt(M_PI);
    double he_prev = 0.0, he = 1.0;  // He_{-1}, He_0
    for (int k = 0; k <= p; ++k) {
      coeffs[k] += quad_w * sig * he;
      const double he_next = g * he - k * he_prev;
      he_prev = he;
      he = he_next;
    }
  }
  double factorial = 1.0;
  for (int k = 0; k <= p; ++k) {
    if (k > 0) factorial *= k;
    coeffs[k] /= std::sqrt(factorial);
    if (!std::isfinite(coeffs[k])) {
      throw NumericError("Hermite quadrature overflowed for activation " +
                         act.name());
    }
  }
  return coeffs;
}

bool is_strongly_expressive(const Activation& act, int p) {
  if (p < 1) throw InvalidInput("expressiveness order must be >= 1");
  const auto c = hermite_coeffs(act, p);
  for (int k = 1; k <= p; ++k) {
    if (std::abs(c[k]) <= 1e-8) return false;
  }
  return true;
}

SpectrumTable feature_spectrum_scaling(const Activation& act,
                                       const std::vector<int>& dims,
                                       const std::vector<int>& t_sizes,
                                       int trials, std::uint64_t seed) {
  if (trials < 2) throw InvalidInput("need at least two trials");
  SpectrumTable table;
  std::map<int, std::vector<std::pair<double, double>>> log_points;

  for (int d : dims) {
    if (d < 1 || d > 14) {
      throw InvalidInput("spectrum scaling needs dimensions in [1, 14]");
    }
    const std::size_t n = std::size_t{1} << d;
    Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(d));
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    std::map<int, std::vector<double>> per_trial;  // size -> per-trial mean
    std::vector<double> cross(trials);
    std::vector<double> feature(n);
    for (int trial = 0; trial < trials; ++trial) {
      Eigen::VectorXd w(d);
      for (int j = 0; j < d; ++j) w(j) = rng.gaussian() * scale;
      const double b = rng.gaussian() * scale;
      for (Point p = 0; p < n; ++p) {
        double z = b;
        for (int j = 0; j < d; ++j) z += w(j) * coordinate(p, j);
        feature[p] = act(z);
      }
      const auto hat = transform(feature);
      for (int sz : t_sizes) {
        double acc = 0.0;
        std::size_t count = 0;
        for (Mask t = 0; t < n; ++t) {
          if (set_size(t) == sz) {
            acc += hat[t] * hat[t];
            ++count;
          }
        }
        per_trial[sz].push_back(count ? acc / static_cast<double>(count) : 0.0);
      }
      cross[trial] = (d >= 2) ? hat[0b01] * hat[0b10] : 0.0;
    }

    for (int sz : t_sizes) {
      const auto& v = per_trial[sz];
      const double mean =
          std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(trials);
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(trials - 1);
      table.rows.push_back(
          {d, sz, mean, std::sqrt(var / static_cast<double>(trials))});
      if (mean > 0.0) {
        log_points[sz].emplace_back(std::log(static_cast<double>(d)),
                                    std::log(mean));
      }
    }
    if (d == dims.back()) {
      const double mean = std::accumulate(cross.begin(), cross.end(), 0.0) /
                          static_cast<double>(trials);
      double var = 0.0;
      for (double x : cross) var += (x - mean) * (x - mean);
      var /= static_cast<double>(trials - 1);
      table.cross_term_mean = mean;
      table.cross_term_std_error = std::sqrt(var / static_cast<double>(trials));
    }
  }

  for (const auto& [sz, pts] : log_points) {
    if (pts.size() < 2) continue;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [lx, ly] : pts) {
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double n = static_cast<double>(pts.size());
    table.slope_per_size[sz] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return table;
}

ParityAsymmetryReport relu_parity_asymmetry(int d, int n_features,
                                            std::uint64_t seed,
                                            const FitOptions& opts) {
  if (d < 6) throw InvalidInput("asymmetry experiment needs dimension >= 6");
  const auto target = BooleanFunction::from_sparse_coeffs(
      d, {{kAsymMaskLowHigh, 1.0}, {kAsymMaskOddHigh, 1.0}});
  const UnseenDomain domain(d, FrozenPattern{{0}, {-1}});

  std::vector<Point> seen;
  if (d <= 16) {
    seen = domain.enumerate_seen();
  } else {
    seen = domain.sample_seen(std::size_t{1} << 15, seed ^ 0x5eedULL);
  }
  std::vector<double> labels(seen.size());
  const auto& tv = target.values();
  for (std::size_t i = 0; i < seen.size(); ++i) labels[i] = tv[seen[i]];

  ParityAsymmetryReport rep;
  const std::vector<Mask> masks = {kAsymMaskLow, kAsymMaskLowHigh, kAsymMaskOdd,
                                   kAsymMaskOddHigh};
  const auto pick = [&](const RFModel& model, std::map<Mask, double>* out) {
    std::map<Mask, double> all;
    for (const auto& [t, c] : extract_fourier_exact(model)) all[t] = c;
    for (Mask t : masks) (*out)[t] = all.count(t) ? all[t] : 0.0;
  };
  {
    RFModel relu = make_rf_model(d, n_features, Activation::relu(), seed);
    rep.relu_fit_error = fit_min_norm(relu, seen, labels, opts).max_error;
    pick(relu, &rep.relu_coeffs);
  }
  {
    RFModel poly =
        make_rf_model(d, n_features, Activation::polynomial_power(6), seed);
    rep.poly_fit_error = fit_min_norm(poly, seen, labels, opts).max_error;
    pick(poly, &rep.poly_coeffs);
  }
  return rep;
}

}  // namespace gotu
