#include "gotu/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gotu/errors.hpp"

namespace gotu {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------- net

FeedForwardNet FeedForwardNet::make(int input_dim, const ModelSpec& spec,
                                    std::uint64_t seed) {
  if (input_dim < 1) throw InvalidInput("input dimension must be >= 1");
  FeedForwardNet net;
  net.input_dim_ = input_dim;
  Rng rng(seed);

  std::vector<int> dims{input_dim};
  if (const auto* mlp = std::get_if<MlpSpec>(&spec)) {
    for (int h : mlp->hidden) {
      if (h < 1) throw InvalidInput("hidden widths must be positive");
      dims.push_back(h);
    }
    dims.push_back(1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
      Eigen::MatrixXd w(dims[l], dims[l + 1]);
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
          w(i, j) = rng.uniform(-bound, bound);
        }
      }
      Eigen::VectorXd b(dims[l + 1]);
      for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = rng.uniform(-bound, bound);
      net.w_.push_back(std::move(w));
      net.b_.push_back(std::move(b));
    }
  } else {
    const auto& mf = std::get<MeanFieldSpec>(spec);
    if (mf.neurons < 1) throw InvalidInput("mean-field neuron count must be >= 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    Eigen::MatrixXd w1(input_dim, mf.neurons);
    Eigen::VectorXd b1(mf.neurons);
    Eigen::MatrixXd w2(mf.neurons, 1);
    // stream layout: per neuron a_i, then its weights, then its bias
    for (int i = 0; i < mf.neurons; ++i) {
      w2(i, 0) = rng.uniform(-1.0, 1.0);
      for (int j = 0; j < input_dim; ++j) w1(j, i) = rng.uniform(-bound, bound);
      b1(i) = rng.uniform(-bound, bound);
    }
    net.w_.push_back(std::move(w1));
    net.b_.push_back(std::move(b1));
    net.w_.push_back(std::move(w2));
    net.b_.push_back(Eigen::VectorXd::Zero(1));
    net.output_scale_ = 1.0 / static_cast<double>(mf.neurons);
    net.output_bias_enabled_ = false;
  }
  return net;
}

Eigen::VectorXd FeedForwardNet::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  const int layers = layer_count();
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = a * w_[l];
    if (l + 1 < layers || output_bias_enabled_) z.rowwise() += b_[l].transpose();
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a.col(0) * output_scale_;
}

double FeedForwardNet::mse(const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y) const {
  return (forward(x) - y).squaredNorm() / static_cast<double>(x.rows());
}

void FeedForwardNet::Gradients::set_zero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

FeedForwardNet::Gradients FeedForwardNet::zero_gradients() const {
  Gradients g;
  for (const auto& m : w_) g.w.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  for (const auto& v : b_) g.b.push_back(Eigen::VectorXd::Zero(v.size()));
  return g;
}

void FeedForwardNet::backward(const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& dout,
                              Gradients* g) const {
  const int layers = layer_count();
  std::vector<Eigen::MatrixXd> acts(layers + 1);
  acts[0] = x;
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = acts[l] * w_[l];
    if (l + 1 < layers || output_bias_enabled_) z.rowwise() += b_[l].transpose();
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    acts[l + 1] = std::move(z);
  }

  Eigen::MatrixXd delta = dout * output_scale_;  // (B x 1)
  for (int l = layers - 1; l >= 0; --l) {
    g->w[l].noalias() += acts[l].transpose() * delta;
    if (l + 1 < layers || output_bias_enabled_) {
      g->b[l].noalias() += delta.colwise().sum().transpose();
    }
    if (l > 0) {
      Eigen::MatrixXd prev = delta * w_[l].transpose();
      // ReLU mask from the stored post-activation
      prev.array() *= (acts[l].array() > 0.0).cast<double>();
      delta = std::move(prev);
    }
  }
}

double FeedForwardNet::mse_backward(const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& y,
                                    Gradients* g) const {
  const Eigen::VectorXd out = forward(x);
  const Eigen::VectorXd err = out - y;
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  backward(x, 2.0 * inv_n * err, g);
  return err.squaredNorm() * inv_n;
}

BooleanFunction FeedForwardNet::to_boolean_function() const {
  if (input_dim_ > 20) {
    throw BudgetError("full truth table requires dimension <= 20");
  }
  const std::size_t n = std::size_t{1} << input_dim_;
  std::vector<double> values(n);
  constexpr std::size_t kBlock = 8192;
  for (std::size_t start = 0; start < n; start += kBlock) {
    const std::size_t rows = std::min(kBlock, n - start);
    Eigen::MatrixXd x(rows, input_dim_);
    for (std::size_t i = 0; i < rows; ++i) {
      for (int j = 0; j < input_dim_; ++j) {
        x(i, j) = coordinate(start + i, j);
      }
    }
    const Eigen::VectorXd out = forward(x);
    for (std::size_t i = 0; i < rows; ++i) values[start + i] = out(i);
  }
  return BooleanFunction::from_values(input_dim_, std::move(values));
}

// ---------------------------------------------------------------- optimizer

Optimizer::Optimizer(const FeedForwardNet& net, const OptimizerConfig& config)
    : config_(config) {
  adam_ = std::holds_alternative<AdamConfig>(config_);
  if (adam_) {
    m_ = net.zero_gradients();
    v_ = net.zero_gradients();
  }
}

int Optimizer::batch_size() const {
  return adam_ ? std::get<AdamConfig>(config_).batch
               : std::get<SgdConfig>(config_).batch;
}

double Optimizer::learning_rate() const {
  return adam_ ? std::get<AdamConfig>(config_).lr
               : std::get<SgdConfig>(config_).lr;
}

void Optimizer::set_learning_rate(double lr) {
  if (adam_) {
    std::get<AdamConfig>(config_).lr = lr;
  } else {
    std::get<SgdConfig>(config_).lr = lr;
  }
}

void Optimizer::step(FeedForwardNet& net, const FeedForwardNet::Gradients& g) {
  if (!adam_) {
    const double lr = std::get<SgdConfig>(config_).lr;
    for (std::size_t l = 0; l < g.w.size(); ++l) {
      net.weights()[l] -= lr * g.w[l];
      net.biases()[l] -= lr * g.b[l];
    }
    return;
  }
  const auto& cfg = std::get<AdamConfig>(config_);
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (std::size_t l = 0; l < g.w.size(); ++l) {
    m_.w[l] = cfg.beta1 * m_.w[l] + (1.0 - cfg.beta1) * g.w[l];
    v_.w[l] = cfg.beta2 * v_.w[l] + (1.0 - cfg.beta2) * g.w[l].cwiseAbs2();
    net.weights()[l].array() -=
        cfg.lr * (m_.w[l].array() / bc1) /
        ((v_.w[l].array() / bc2).sqrt() + cfg.eps);
    m_.b[l] = cfg.beta1 * m_.b[l] + (1.0 - cfg.beta1) * g.b[l];
    v_.b[l] = cfg.beta2 * v_.b[l] + (1.0 - cfg.beta2) * g.b[l].cwiseAbs2();
    net.biases()[l].array() -=
        cfg.lr * (m_.b[l].array() / bc1) /
        ((v_.b[l].array() / bc2).sqrt() + cfg.eps);
  }
}

// ---------------------------------------------------------------- trainer

MiniBatchTrainer::MiniBatchTrainer(FeedForwardNet& net, const TrainConfig& config)
    : net_(net),
      config_(config),
      opt_(net, config.optimizer),
      rng_(config.seed ^ 0xda7a5eedULL),
      grads_(net.zero_gradients()) {}

double MiniBatchTrainer::run_epoch(const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const int batch = opt_.batch_size();
  if (order_.size() != n) {
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
  }
  rng_.shuffle(order_.begin(), order_.end());

  double loss_acc = 0.0;
  std::size_t batches = 0;
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t rows = std::min<std::size_t>(batch, n - start);
    xb.resize(rows, x.cols());
    yb.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      xb.row(i) = x.row(order_[start + i]);
      yb(i) = y(order_[start + i]);
    }
    grads_.set_zero();
    const double batch_loss = net_.mse_backward(xb, yb, &grads_);

    if (config_.lambda_symmetry > 0.0) {
      const int ns = config_.regularizer_samples;
      const int d = net_.input_dim();
      Eigen::MatrixXd xr(ns, d);
      for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < d; ++j) xr(i, j) = rng_.coin() ? -1.0 : 1.0;
      }
      std::vector<int> perm(d);
      std::iota(perm.begin(), perm.end(), 0);
      for (int p = 0; p < config_.regularizer_permutations; ++p) {
        rng_.shuffle(perm.begin(), perm.end());
        Eigen::MatrixXd xp(ns, d);
        for (int j = 0; j < d; ++j) xp.col(j) = xr.col(perm[j]);
        const Eigen::VectorXd diff = net_.forward(xr) - net_.forward(xp);
        const double w = 2.0 * config_.lambda_symmetry /
                         (static_cast<double>(ns) *
                          config_.regularizer_permutations);
        net_.backward(xr, w * diff, &grads_);
        net_.backward(xp, -w * diff, &grads_);
      }
    }

    opt_.step(net_, grads_);
    ++steps_;
    loss_acc += batch_loss;
    ++batches;
    if (!std::isfinite(batch_loss) || batch_loss > config_.divergence_loss) {
      diverged_ = true;
      divergence_step_ = steps_;
      break;
    }
  }
  return batches ? loss_acc / static_cast<double>(batches) : 0.0;
}

// ---------------------------------------------------------------- train

namespace {

std::vector<double> tracked_coeffs(const FeedForwardNet& net,
                                   const std::vector<Mask>& masks) {
  if (masks.empty()) return {};
  const BooleanFunction f = net.to_boolean_function();
  std::vector<double> out;
  out.reserve(masks.size());
  for (Mask t : masks) out.push_back(f.coeff(t));
  return out;
}

struct CheckpointRecorder {
  explicit CheckpointRecorder(RunRecord& rec, long max_points)
      : rec(rec), max_points(std::max<long>(max_points, 8)) {}
  void push(Checkpoint cp) {
    if (counter++ % stride != 0) return;
    rec.checkpoints.push_back(std::move(cp));
    if (static_cast<long>(rec.checkpoints.size()) >= max_points) {
      std::vector<Checkpoint> kept;
      for (std::size_t i = 0; i < rec.checkpoints.size(); i += 2) {
        kept.push_back(std::move(rec.checkpoints[i]));
      }
      rec.checkpoints = std::move(kept);
      stride *= 2;
    }
  }
  RunRecord& rec;
  long max_points;
  std::size_t counter = 0;
  std::size_t stride = 1;
};

RunRecord train_impl(const ModelSpec& spec, const GotuTask& task,
                     const DataSpec& data, const TrainConfig& config) {
  const int d = task.target.dim();
  if (task.domain && task.domain->dim() != d) {
    throw InvalidInput("task target and domain dimensions differ");
  }

  std::vector<Point> points;
  if (data.mode == DataSpec::Mode::Exhaustive) {
    if (d > 16) {
      throw BudgetError("exhaustive training data requires dimension <= 16");
    }
    if (task.domain) {
      points = task.domain->enumerate_seen();
    } else {
      points.resize(std::size_t{1} << d);
      std::iota(points.begin(), points.end(), 0);
    }
  } else {
    if (data.n_samples < 1) throw InvalidInput("sampled mode needs n >= 1");
    if (task.domain) {
      points = task.domain->sample_seen(data.n_samples, config.seed ^ 0x5a3dULL);
    } else {
      Rng rng(config.seed ^ 0x5a3dULL);
      const Point mask = (Point{1} << d) - 1;
      points.resize(data.n_samples);
      for (auto& p : points) p = rng.bits() & mask;
    }
  }

  Eigen::MatrixXd x(points.size(), d);
  Eigen::VectorXd y(points.size());
  const auto& tv = task.target.values();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = coordinate(points[i], j);
    y(i) = tv[points[i]];
  }

  FeedForwardNet net = FeedForwardNet::make(d, spec, config.seed);
  MiniBatchTrainer trainer(net, config);

  RunRecord rec;
  rec.track_masks = config.track_masks;
  CheckpointRecorder recorder(rec, config.max_checkpoints);
  recorder.push({0, 0, net.mse(x, y), tracked_coeffs(net, config.track_masks)});

  const bool per_step_checkpoints = data.mode == DataSpec::Mode::Sampled;
  long next_step_checkpoint = 100;
  double last_loss = rec.checkpoints.front().train_loss;
  for (long epoch = 1; epoch <= config.epochs; ++epoch) {
    last_loss = trainer.run_epoch(x, y);
    if (trainer.diverged()) break;
    if (per_step_checkpoints) {
      while (trainer.steps() >= next_step_checkpoint) {
        recorder.push({trainer.steps(), epoch, last_loss,
                       tracked_coeffs(net, config.track_masks)});
        next_step_checkpoint += 100;
      }
    } else {
      recorder.push({trainer.steps(), epoch, last_loss,
                     tracked_coeffs(net, config.track_masks)});
    }
    if (last_loss <= config.early_stop_loss) break;
    if (config.step_budget >= 0 && trainer.steps() >= config.step_budget) break;
  }

  rec.final_train_loss = last_loss;
  rec.total_steps = trainer.steps();
  rec.diverged = trainer.diverged();
  rec.divergence_step = trainer.divergence_step();

  if (!rec.diverged && d <= 20) {
    rec.learned = net.to_boolean_function();
    rec.final_coeffs = rec.learned.sparse_coeffs(1e-10);
    if (task.domain && task.domain->unseen_count() > 0) {
      const auto unseen = task.domain->enumerate_unseen();
      rec.final_gotu = gotu_loss(task.target, rec.learned, unseen);
    } else {
      rec.final_gotu = kNaN;
    }
    rec.alpha_leak = task.high_monomial
                         ? rec.learned.coeff(*task.high_monomial) /
                               task.high_target_coeff
                         : kNaN;
  } else {
    rec.final_gotu = kNaN;
    rec.alpha_leak = kNaN;
  }
  return rec;
}

}  // namespace

RunRecord train(const ModelSpec& spec, const GotuTask& task,
                const DataSpec& data, const TrainConfig& config) {
  RunRecord rec = train_impl(spec, task, data, config);
  if (rec.diverged) {
    throw DivergenceError("training diverged at step " +
                              std::to_string(rec.divergence_step),
                          rec.divergence_step);
  }
  return rec;
}

RunRecord train_no_throw(const ModelSpec& spec, const GotuTask& task,
                         const DataSpec& data, const TrainConfig& config) {
  return train_impl(spec, task, data, config);
}

std::vector<LrSensitivityRow> lr_sensitivity(
    const ModelSpec& spec, const GotuTask& task, const DataSpec& data,
    TrainConfig config, const std::vector<double>& lrs,
    const std::vector<std::uint64_t>& seeds) {
  if (!task.high_monomial) {
    throw InvalidInput("lr sensitivity needs a task with a leakage monomial");
  }
  std::vector<LrSensitivityRow> rows;
  for (double lr : lrs) {
    LrSensitivityRow row;
    row.lr = lr;
    std::vector<double> alphas;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = config;
      cfg.seed = seed;
      if (auto* sgd = std::get_if<SgdConfig>(&cfg.optimizer)) {
        sgd->lr = lr;
      } else {
        std::get<AdamConfig>(cfg.optimizer).lr = lr;
      }
      const RunRecord rec = train_no_throw(spec, task, data, cfg);
      if (rec.diverged) {
        ++row.n_diverged;
      } else {
        alphas.push_back(rec.alpha_leak);
      }
    }
    row.n_seeds = static_cast<int>(seeds.size());
    if (!alphas.empty()) {
      const double mean = std::accumulate(alphas.begin(), alphas.end(), 0.0) /
                          static_cast<double>(alphas.size());
      double var = 0.0;
      for (double a : alphas) var += (a - mean) * (a - mean);
      row.mean_alpha = mean;
      row.std_alpha = alphas.size() > 1
                          ? std::sqrt(var / static_cast<double>(alphas.size() - 1))
                          : 0.0;
    } else {
      row.mean_alpha = kNaN;
      row.std_alpha = kNaN;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<LengthGenRow> length_gen_experiment(int d,
                                                const std::vector<int>& radii,
                                                const ModelSpec& spec,
                                                const TrainConfig& config) {
  if (d < 1 || d > 16) {
    throw InvalidInput("length-generalization training needs 1 <= d <= 16");
  }
  const Mask full = (Mask{1} << d) - 1;
  std::vector<LengthGenRow> rows;
  for (int r : radii) {
    GotuTask task;
    task.target = make_parity(d, full);
    task.domain = UnseenDomain(d, BallComplement{r});
    const RunRecord rec =
        train_no_throw(spec, task, DataSpec{DataSpec::Mode::Exhaustive, 0}, config);
    LengthGenRow row;
    row.radius = r;
    row.final_train_loss = rec.final_train_loss;
    if (rec.learned.valid()) {
      row.profile = degree_profile(rec.learned);
      row.full_parity_coeff = rec.learned.coeff(full);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace gotu
