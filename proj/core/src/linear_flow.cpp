#include "gotu/linear_flow.hpp"

#include <cmath>
#include <limits>

#include "gotu/errors.hpp"
#include "gotu/rng.hpp"

namespace gotu {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Keeps at most max_points rows by doubling the keep-stride when full;
// running maxima are tracked separately so thinning loses nothing.
struct TraceRecorder {
  explicit TraceRecorder(FlowTrace& trace, int max_points)
      : trace(trace), max_points(std::max(max_points, 16)) {}

  void push(double t, double loss, double leak, double drift,
            const std::vector<double>& contribs = {}) {
    if (counter++ % stride != 0) return;
    trace.t.push_back(t);
    trace.loss.push_back(loss);
    trace.leakage.push_back(leak);
    trace.conservation_drift.push_back(drift);
    if (!contribs.empty()) trace.bias_contributions.push_back(contribs);
    if (trace.t.size() >= static_cast<std::size_t>(max_points)) thin();
  }

  void thin() {
    auto keep_half = [](auto& v) {
      for (std::size_t i = 0, j = 0; i < v.size(); i += 2) v[j++] = v[i];
      v.resize((v.size() + 1) / 2);
    };
    keep_half(trace.t);
    keep_half(trace.loss);
    keep_half(trace.leakage);
    keep_half(trace.conservation_drift);
    if (!trace.bias_contributions.empty()) keep_half(trace.bias_contributions);
    stride *= 2;
  }

  FlowTrace& trace;
  int max_points;
  std::size_t counter = 0;
  std::size_t stride = 1;
};

}  // namespace

double FlowTrace::max_conservation_drift() const {
  double out = 0.0;
  for (double v : conservation_drift) {
    if (std::isfinite(v)) out = std::max(out, v);
  }
  return out;
}

bool FlowTrace::loss_non_increasing(double slack) const {
  for (std::size_t i = 1; i < loss.size(); ++i) {
    if (loss[i] > loss[i - 1] + slack) return false;
  }
  return true;
}

// ------------------------------------------------------------------
// diagonal linear network with one bias, k-th coordinate frozen to +1
// ------------------------------------------------------------------

FlowTrace flow_diagonal(const DiagonalFlowConfig& cfg) {
  const int d = cfg.d;
  const int L = cfg.depth;
  if (L < 2) throw InvalidInput("diagonal flow needs depth >= 2");
  if (cfg.alpha > 0.5 || cfg.alpha <= 0.0) {
    throw InvalidInput("diagonal flow expects 0 < alpha <= 1/2");
  }
  if (static_cast<int>(cfg.target.size()) != d + 1) {
    throw InvalidInput("target must carry a bias plus d linear coefficients");
  }
  if (cfg.frozen_k < 0 || cfg.frozen_k >= d) {
    throw InvalidInput("frozen coordinate out of range");
  }

  // state layout: [b, w^(0)_0..w^(0)_{d-1}, ..., w^(L-1)_*]
  const auto widx = [d](int l, int i) { return 1 + l * d + i; };
  Rng rng(cfg.seed);
  Eigen::VectorXd y(1 + L * d);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y(i) = rng.uniform(-cfg.alpha, cfg.alpha);
  }

  const double total_bias = cfg.target[0] + cfg.target[1 + cfg.frozen_k];

  // prefix/suffix exclusion products avoid dividing by near-zero weights
  std::vector<double> pre(L + 1), suf(L + 1);
  const auto rhs = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
    ds.setZero();
    double residual_k = 0.0;
    for (int i = 0; i < d; ++i) {
      pre[0] = 1.0;
      for (int l = 0; l < L; ++l) pre[l + 1] = pre[l] * s(widx(l, i));
      suf[L] = 1.0;
      for (int l = L - 1; l >= 0; --l) suf[l] = suf[l + 1] * s(widx(l, i));
      const double product = pre[L];
      const double residual = (i == cfg.frozen_k)
                                  ? (s(0) + product) - total_bias
                                  : product - cfg.target[1 + i];
      if (i == cfg.frozen_k) residual_k = residual;
      for (int l = 0; l < L; ++l) {
        ds(widx(l, i)) = -pre[l] * suf[l + 1] * residual;
      }
    }
    ds(0) = -residual_k;
  };

  const auto loss_of = [&](const Eigen::VectorXd& s) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      double product = 1.0;
      for (int l = 0; l < L; ++l) product *= s(widx(l, i));
      const double residual = (i == cfg.frozen_k)
                                  ? (s(0) + product) - total_bias
                                  : product - cfg.target[1 + i];
      acc += 0.5 * residual * residual;
    }
    return acc;
  };

  // balancedness reference: (w_i^(l))^2 - (w_i^(l+1))^2 at t = 0
  std::vector<double> balance0(static_cast<std::size_t>(d) * (L - 1));
  const auto balance_drift = [&](const Eigen::VectorXd& s) {
    double drift = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int l = 0; l + 1 < L; ++l) {
        const double q = s(widx(l, i)) * s(widx(l, i)) -
                         s(widx(l + 1, i)) * s(widx(l + 1, i));
        drift = std::max(drift, std::abs(q - balance0[i * (L - 1) + l]));
      }
    }
    return drift;
  };
  for (int i = 0; i < d; ++i) {
    for (int l = 0; l + 1 < L; ++l) {
      balance0[i * (L - 1) + l] =
          y(widx(l, i)) * y(widx(l, i)) - y(widx(l + 1, i)) * y(widx(l + 1, i));
    }
  }

  FlowTrace trace;
  TraceRecorder rec(trace, cfg.max_trace_points);
  const auto leak_of = [&](const Eigen::VectorXd& s) {
    double product = 1.0;
    for (int l = 0; l < L; ++l) product *= s(widx(l, cfg.frozen_k));
    return std::abs(product);
  };
  rec.push(0.0, loss_of(y), leak_of(y), 0.0);

  OdeOptions opts;
  opts.rel_tol = cfg.rel_tol;
  opts.abs_tol = cfg.abs_tol;
  opts.t_end = cfg.t_end;
  double t_last = 0.0;
  trace.status = integrate_rk45(
      rhs, y, 0.0, opts, [&](double t, const Eigen::VectorXd& s) {
        const double loss = loss_of(s);
        t_last = t;
        rec.push(t, loss, leak_of(s), balance_drift(s));
        return loss < cfg.loss_stop;
      });
  // force-record the terminal state
  rec.stride = 1;
  rec.counter = 0;
  rec.push(t_last, loss_of(y), leak_of(y), balance_drift(y));
  return trace;
}

// ------------------------------------------------------------------
// fully connected linear network
// ------------------------------------------------------------------

namespace {

struct FcState {
  std::vector<Eigen::MatrixXd> w;  // w[i]: dims[i-1] x dims[i], i = 1..L-1
  Eigen::VectorXd w_last;          // dims[L-1]
  std::vector<Eigen::VectorXd> b;  // b[i]: dims[i], i = 1..L-1
  double b_last = 0.0;
};

struct FcLayout {
  std::vector<int> dims;
  int depth = 0;  // L

  explicit FcLayout(const std::vector<int>& dims_in) : dims(dims_in) {
    depth = static_cast<int>(dims.size());
    if (depth < 2) throw InvalidInput("FC flow needs depth >= 2");
    for (int w : dims) {
      if (w < 1) throw InvalidInput("layer widths must be positive");
    }
  }

  Eigen::Index size() const {
    Eigen::Index n = 0;
    for (int i = 1; i < depth; ++i) n += dims[i - 1] * dims[i] + dims[i];
    return n + dims[depth - 1] + 1;  // w_last and b_last
  }

  FcState unpack(const Eigen::VectorXd& y) const {
    FcState s;
    Eigen::Index pos = 0;
    s.w.resize(depth);
    s.b.resize(depth);
    for (int i = 1; i < depth; ++i) {
      s.w[i] = Eigen::Map<const Eigen::MatrixXd>(y.data() + pos, dims[i - 1],
                                                 dims[i]);
      pos += dims[i - 1] * dims[i];
    }
    s.w_last = y.segment(pos, dims[depth - 1]);
    pos += dims[depth - 1];
    for (int i = 1; i < depth; ++i) {
      s.b[i] = y.segment(pos, dims[i]);
      pos += dims[i];
    }
    s.b_last = y(pos);
    return s;
  }

  void pack(const FcState& s, Eigen::VectorXd& y) const {
    Eigen::Index pos = 0;
    for (int i = 1; i < depth; ++i) {
      Eigen::Map<Eigen::MatrixXd>(y.data() + pos, dims[i - 1], dims[i]) = s.w[i];
      pos += dims[i - 1] * dims[i];
    }
    y.segment(pos, dims[depth - 1]) = s.w_last;
    pos += dims[depth - 1];
    for (int i = 1; i < depth; ++i) {
      y.segment(pos, dims[i]) = s.b[i];
      pos += dims[i];
    }
    y(pos) = s.b_last;
  }
};

// suffix products c_i = W_{i+1} ... W_{L-1} w_L
std::vector<Eigen::VectorXd> suffixes(const FcLayout& lay, const FcState& s) {
  std::vector<Eigen::VectorXd> c(lay.depth);
  c[lay.depth - 1] = s.w_last;
  for (int i = lay.depth - 2; i >= 1; --i) c[i] = s.w[i + 1] * c[i + 1];
  return c;
}

FcState init_directions(const FcLayout& lay, FlowInit scheme, Rng& rng) {
  FcState s;
  s.w.resize(lay.depth);
  s.b.resize(lay.depth);
  const auto draw = [&](int fan_in) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return scheme == FlowInit::GaussianDirections
               ? rng.gaussian() * scale
               : rng.uniform(-scale, scale);
  };
  for (int i = 1; i < lay.depth; ++i) {
    s.w[i].resize(lay.dims[i - 1], lay.dims[i]);
    for (Eigen::Index r = 0; r < s.w[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < s.w[i].cols(); ++c) {
        s.w[i](r, c) = draw(lay.dims[i - 1]);
      }
    }
    s.b[i].resize(lay.dims[i]);
    for (Eigen::Index r = 0; r < s.b[i].size(); ++r) s.b[i](r) = draw(lay.dims[i - 1]);
  }
  s.w_last.resize(lay.dims[lay.depth - 1]);
  for (Eigen::Index r = 0; r < s.w_last.size(); ++r) {
    s.w_last(r) = draw(lay.dims[lay.depth - 1]);
  }
  s.b_last = draw(lay.dims[lay.depth - 1]);
  return s;
}

void scale_state(FcState& s, double alpha) {
  for (auto& w : s.w) {
    if (w.size()) w *= alpha;
  }
  s.w_last *= alpha;
  for (auto& b : s.b) {
    if (b.size()) b *= alpha;
  }
  s.b_last *= alpha;
}

}  // namespace

FcFlowResult flow_fc_linear(const FcFlowConfig& cfg) {
  FcLayout lay(cfg.dims);
  const int L = lay.depth;
  if (cfg.w_star.size() != cfg.dims[0]) {
    throw InvalidInput("w_star length must match the input dimension");
  }
  if (cfg.gamma <= 0.0) throw InvalidInput("gamma must be positive");

  Rng rng(cfg.seed);
  FcState s0 = init_directions(lay, cfg.init, rng);
  if (cfg.enforce_balance_condition && L == 2) {
    const double need = s0.w[1].squaredNorm() +
                        s0.b[1].squaredNorm() / cfg.gamma + 1.0;
    s0.w_last *= std::sqrt(need / s0.w_last.squaredNorm());
  }
  scale_state(s0, cfg.alpha);

  Eigen::VectorXd y(lay.size());
  lay.pack(s0, y);

  const double conservation0 =
      (L == 2) ? s0.w_last.squaredNorm() - s0.w[1].squaredNorm() -
                     s0.b[1].squaredNorm() / cfg.gamma
               : kNaN;

  struct Snapshot {
    double loss;
    Eigen::VectorXd r_w;
    double r_b;
    std::vector<double> contribs;
    double b1_norm;
    double drift;
  };
  const auto analyze = [&](const Eigen::VectorXd& yv) {
    const FcState s = lay.unpack(yv);
    const auto c = suffixes(lay, s);
    Snapshot snap;
    snap.r_w = s.w[1] * c[1] - cfg.w_star;
    double total = s.b_last;
    snap.contribs.resize(L);
    for (int i = 1; i < L; ++i) {
      snap.contribs[i - 1] = s.b[i].dot(c[i]);
      total += snap.contribs[i - 1];
    }
    snap.contribs[L - 1] = s.b_last;
    snap.r_b = total - cfg.b_star;
    snap.loss = 0.5 * (snap.r_w.squaredNorm() + snap.r_b * snap.r_b);
    snap.b1_norm = s.b[1].norm();
    snap.drift = (L == 2) ? std::abs(s.w_last.squaredNorm() -
                                     s.w[1].squaredNorm() -
                                     s.b[1].squaredNorm() / cfg.gamma -
                                     conservation0)
                          : kNaN;
    return snap;
  };

  const auto rhs = [&](double, const Eigen::VectorXd& yv, Eigen::VectorXd& dy) {
    const FcState s = lay.unpack(yv);
    const auto c = suffixes(lay, s);
    const Eigen::VectorXd r_w = s.w[1] * c[1] - cfg.w_star;
    double total = s.b_last;
    for (int i = 1; i < L; ++i) total += s.b[i].dot(c[i]);
    const double r_b = total - cfg.b_star;

    // p_i = W_i^T ... W_1^T r_w; g_{i+1} = W_i^T g_i + b_i
    std::vector<Eigen::VectorXd> p(L), g(L + 1);
    p[0] = r_w;
    g[1] = Eigen::VectorXd::Zero(lay.dims[0]);
    FcState grad;
    grad.w.resize(L);
    grad.b.resize(L);
    for (int i = 1; i < L; ++i) {
      grad.w[i] = p[i - 1] * c[i].transpose();
      if (i >= 2) grad.w[i] += r_b * (g[i] * c[i].transpose());
      p[i] = s.w[i].transpose() * p[i - 1];
      g[i + 1] = s.w[i].transpose() * g[i] + s.b[i];
      grad.b[i] = r_b * c[i];
    }
    grad.w_last = p[L - 1] + r_b * g[L];
    grad.b_last = r_b;

    grad.b[1] *= cfg.gamma;
    for (auto& w : grad.w) {
      if (w.size()) w = -w;
    }
    grad.w_last = -grad.w_last;
    for (auto& b : grad.b) {
      if (b.size()) b = -b;
    }
    grad.b_last = -grad.b_last;
    lay.pack(grad, dy);
  };

  FcFlowResult out;
  TraceRecorder rec(out.trace, cfg.max_trace_points);
  {
    const auto snap = analyze(y);
    rec.push(0.0, snap.loss, std::abs(snap.contribs[0]), snap.drift, snap.contribs);
  }
  double max_drift = 0.0;
  double t_last = 0.0;
  OdeOptions opts;
  opts.rel_tol = cfg.rel_tol;
  opts.abs_tol = cfg.abs_tol;
  opts.t_end = cfg.t_end;
  out.trace.status = integrate_rk45(
      rhs, y, 0.0, opts, [&](double t, const Eigen::VectorXd& yv) {
        const auto snap = analyze(yv);
        if (std::isfinite(snap.drift)) max_drift = std::max(max_drift, snap.drift);
        t_last = t;
        rec.push(t, snap.loss, std::abs(snap.contribs[0]), snap.drift,
                 snap.contribs);
        return snap.loss < cfg.loss_stop;
      });

  const auto snap = analyze(y);
  rec.stride = 1;
  rec.counter = 0;
  rec.push(t_last, snap.loss, std::abs(snap.contribs[0]), snap.drift,
           snap.contribs);
  out.final_loss = snap.loss;
  out.final_b1_norm = snap.b1_norm;
  out.final_bias_contributions = snap.contribs;
  out.max_conservation_drift = (L == 2) ? std::max(max_drift, snap.drift) : kNaN;
  return out;
}

FrozenBitReport frozen_bit_equivalence(const FrozenBitConfig& cfg) {
  FcLayout lay(cfg.dims);
  const int L = lay.depth;
  const int d = cfg.dims[0];
  if (static_cast<int>(cfg.target.size()) != d + 1) {
    throw InvalidInput("target must carry a bias plus d linear coefficients");
  }
  if (cfg.frozen_k < 0 || cfg.frozen_k >= d) {
    throw InvalidInput("frozen coordinate out of range");
  }
  const int k = cfg.frozen_k;
  const double total_bias = cfg.target[0] + cfg.target[1 + k];
  Eigen::VectorXd w_star(d);
  for (int i = 0; i < d; ++i) w_star(i) = cfg.target[1 + i];

  Rng rng(cfg.seed);
  FcState s0 = init_directions(lay, cfg.init, rng);
  scale_state(s0, cfg.alpha);
  Eigen::VectorXd y(lay.size());
  lay.pack(s0, y);
  const Eigen::VectorXd coupling0 = s0.w[1].row(k).transpose() - s0.b[1];

  // Expected loss over the seen half-cube, via Parseval: the frozen column of
  // W_1 rides the bias path and is excluded from the weight term.
  const auto rhs = [&](double, const Eigen::VectorXd& yv, Eigen::VectorXd& dy) {
    const FcState s = lay.unpack(yv);
    const auto c = suffixes(lay, s);
    Eigen::VectorXd r_w = s.w[1] * c[1] - w_star;
    r_w(k) = 0.0;
    const Eigen::VectorXd b1_eff = s.b[1] + s.w[1].row(k).transpose();
    double total = s.b_last + b1_eff.dot(c[1]);
    for (int i = 2; i < L; ++i) total += s.b[i].dot(c[i]);
    const double r_b = total - total_bias;

    std::vector<Eigen::VectorXd> p(L), g(L + 1);
    p[0] = r_w;
    FcState grad;
    grad.w.resize(L);
    grad.b.resize(L);
    for (int i = 1; i < L; ++i) {
      grad.w[i] = p[i - 1] * c[i].transpose();
      if (i == 1) {
        grad.w[1].row(k) = r_b * c[1].transpose();
      } else {
        grad.w[i] += r_b * (g[i] * c[i].transpose());
      }
      p[i] = s.w[i].transpose() * p[i - 1];
      // the frozen column of W_1 joins b_1 on the bias path
      g[i + 1] = (i == 1) ? b1_eff : (s.w[i].transpose() * g[i] + s.b[i]).eval();
      grad.b[i] = r_b * c[i];
    }
    grad.w_last = p[L - 1] + r_b * g[L];
    grad.b_last = r_b;

    for (auto& w : grad.w) {
      if (w.size()) w = -w;
    }
    grad.w_last = -grad.w_last;
    for (auto& b : grad.b) {
      if (b.size()) b = -b;
    }
    grad.b_last = -grad.b_last;
    lay.pack(grad, dy);
  };

  const auto analyze = [&](const Eigen::VectorXd& yv) {
    const FcState s = lay.unpack(yv);
    const auto c = suffixes(lay, s);
    Eigen::VectorXd r_w = s.w[1] * c[1] - w_star;
    r_w(k) = 0.0;
    const Eigen::VectorXd b1_eff = s.b[1] + s.w[1].row(k).transpose();
    double total = s.b_last + b1_eff.dot(c[1]);
    for (int i = 2; i < L; ++i) total += s.b[i].dot(c[i]);
    const double r_b = total - total_bias;
    const double loss = 0.5 * (r_w.squaredNorm() + r_b * r_b);
    const double frozen_coeff = s.w[1].row(k).dot(c[1]);
    const double coupling_drift =
        ((s.w[1].row(k).transpose() - s.b[1]) - coupling0)
            .cwiseAbs()
            .maxCoeff();
    return std::tuple{loss, frozen_coeff, coupling_drift};
  };

  FrozenBitReport report;
  TraceRecorder rec(report.trace, cfg.max_trace_points);
  {
    const auto [loss, coeff, drift] = analyze(y);
    rec.push(0.0, loss, std::abs(coeff), drift);
  }
  OdeOptions opts;
  opts.rel_tol = cfg.rel_tol;
  opts.abs_tol = cfg.abs_tol;
  opts.t_end = cfg.t_end;
  double max_drift = 0.0;
  double t_last = 0.0;
  report.trace.status = integrate_rk45(
      rhs, y, 0.0, opts, [&](double t, const Eigen::VectorXd& yv) {
        const auto [loss, coeff, drift] = analyze(yv);
        max_drift = std::max(max_drift, drift);
        t_last = t;
        rec.push(t, loss, std::abs(coeff), drift);
        return loss < cfg.loss_stop;
      });
  const auto [loss, coeff, drift] = analyze(y);
  rec.stride = 1;
  rec.counter = 0;
  rec.push(t_last, loss, std::abs(coeff), drift);
  report.max_coupling_drift = std::max(max_drift, drift);
  report.final_frozen_coeff = coeff;
  report.final_loss = loss;
  return report;
}

}  // namespace gotu
