#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "gotu/boolean_function.hpp"
#include "gotu/unseen_domain.hpp"

namespace gotu {

struct MlpSpec {
  std::vector<int> hidden = {512, 1024, 512, 64};  // ReLU hidden layers
};

struct MeanFieldSpec {
  int neurons = 1 << 13;  // 1/N output scaling; ReLU
};

using ModelSpec = std::variant<MlpSpec, MeanFieldSpec>;

// Plain feedforward net with ReLU hidden layers and a scalar linear output.
// MLP: weights and biases U(+-1/sqrt(fan_in)). Mean-field: one hidden layer,
// output weights U(-1, 1), first layer U(+-1/sqrt(d)), output scaled by 1/N
// with no output bias.
class FeedForwardNet {
 public:
  static FeedForwardNet make(int input_dim, const ModelSpec& spec,
                             std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int layer_count() const { return static_cast<int>(w_.size()); }
  double output_scale() const { return output_scale_; }
  bool output_bias_enabled() const { return output_bias_enabled_; }

  Eigen::VectorXd forward(const Eigen::MatrixXd& x) const;
  double mse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const;

  struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    void set_zero();
  };
  Gradients zero_gradients() const;

  // Accumulates gradients of sum_i dout(i) * f(x_i) into *g.
  void backward(const Eigen::MatrixXd& x, const Eigen::VectorXd& dout,
                Gradients* g) const;
  // Convenience: MSE loss and its gradients in one pass.
  double mse_backward(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      Gradients* g) const;

  std::vector<Eigen::MatrixXd>& weights() { return w_; }
  std::vector<Eigen::VectorXd>& biases() { return b_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return w_; }
  const std::vector<Eigen::VectorXd>& biases() const { return b_; }

  // Full-cube truth table of the current function (dim <= 20).
  BooleanFunction to_boolean_function() const;

 private:
  int input_dim_ = 0;
  double output_scale_ = 1.0;
  bool output_bias_enabled_ = true;
  std::vector<Eigen::MatrixXd> w_;  // (in x out) per layer
  std::vector<Eigen::VectorXd> b_;
};

struct SgdConfig {
  double lr = 5e-4;
  int batch = 64;
};
struct AdamConfig {
  double lr = 1e-3;
  int batch = 256;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};
using OptimizerConfig = std::variant<SgdConfig, AdamConfig>;

struct TrainConfig {
  OptimizerConfig optimizer = SgdConfig{};
  long epochs = 200;
  double early_stop_loss = 1e-4;
  long step_budget = -1;  // < 0 means no explicit cap
  std::uint64_t seed = 0;
  double divergence_loss = 1e6;

  // symmetry regularizer lambda * E[(f(x) - f(pi x))^2]; 0 disables it and
  // leaves the training stream untouched
  double lambda_symmetry = 0.0;
  int regularizer_samples = 256;
  int regularizer_permutations = 1;

  std::vector<Mask> track_masks;  // empty: checkpoints carry losses only
  long max_checkpoints = 32;
};

struct GotuTask {
  BooleanFunction target;
  std::optional<UnseenDomain> domain;  // nullopt trains on the full cube
  std::optional<Mask> high_monomial;   // leakage readout, if the task has one
  double high_target_coeff = 1.0;
};

struct DataSpec {
  enum class Mode { Exhaustive, Sampled } mode = Mode::Exhaustive;
  std::size_t n_samples = std::size_t{1} << 15;
};

struct Checkpoint {
  long step = 0;
  long epoch = 0;
  double train_loss = 0.0;
  std::vector<double> tracked;  // one value per TrainConfig::track_masks
};

struct RunRecord {
  std::vector<Checkpoint> checkpoints;
  std::vector<Mask> track_masks;
  double final_train_loss = 0.0;
  long total_steps = 0;
  std::vector<std::pair<Mask, double>> final_coeffs;
  double final_gotu = 0.0;   // NaN when the task has no holdout
  double alpha_leak = 0.0;   // NaN when the task defines no leakage monomial
  bool diverged = false;
  long divergence_step = -1;
  BooleanFunction learned;   // valid when dim <= 20
};

// Trains under l2 loss; deterministic per config seed. Throws DivergenceError
// when the loss blows past config.divergence_loss.
RunRecord train(const ModelSpec& spec, const GotuTask& task,
                const DataSpec& data, const TrainConfig& config);

// Same contract but records divergence in the result instead of throwing.
RunRecord train_no_throw(const ModelSpec& spec, const GotuTask& task,
                         const DataSpec& data, const TrainConfig& config);

struct LrSensitivityRow {
  double lr = 0.0;
  double mean_alpha = 0.0;
  double std_alpha = 0.0;
  int n_seeds = 0;
  int n_diverged = 0;
};

std::vector<LrSensitivityRow> lr_sensitivity(const ModelSpec& spec,
                                             const GotuTask& task,
                                             const DataSpec& data,
                                             TrainConfig config,
                                             const std::vector<double>& lrs,
                                             const std::vector<std::uint64_t>& seeds);

struct LengthGenRow {
  int radius = 0;
  DegreeProfile profile;
  double full_parity_coeff = 0.0;
  double final_train_loss = 0.0;
};

// Trains the model on B_r for the full d-bit parity, one row per radius.
std::vector<LengthGenRow> length_gen_experiment(int d,
                                                const std::vector<int>& radii,
                                                const ModelSpec& spec,
                                                const TrainConfig& config);

// ---- low-level pieces shared with the curriculum module ----

class Optimizer {
 public:
  Optimizer(const FeedForwardNet& net, const OptimizerConfig& config);
  void step(FeedForwardNet& net, const FeedForwardNet::Gradients& g);
  int batch_size() const;
  double learning_rate() const;
  void set_learning_rate(double lr);

 private:
  OptimizerConfig config_;
  long t_ = 0;
  FeedForwardNet::Gradients m_, v_;
  bool adam_ = false;
};

class MiniBatchTrainer {
 public:
  MiniBatchTrainer(FeedForwardNet& net, const TrainConfig& config);

  // One shuffled pass over the data; returns the mean batch loss.
  double run_epoch(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

  long steps() const { return steps_; }
  bool diverged() const { return diverged_; }
  long divergence_step() const { return divergence_step_; }

 private:
  FeedForwardNet& net_;
  TrainConfig config_;
  Optimizer opt_;
  Rng rng_;
  std::vector<std::size_t> order_;
  FeedForwardNet::Gradients grads_;
  long steps_ = 0;
  bool diverged_ = false;
  long divergence_step_ = -1;
};

}  // namespace gotu
