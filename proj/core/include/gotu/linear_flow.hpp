#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gotu/ode.hpp"

namespace gotu {

struct FlowTrace {
  std::vector<double> t;
  std::vector<double> loss;
  std::vector<double> leakage;  // diagonal: |prod_l w_k^(l)|; FC: |w_L^T...W_2^T b_1|
  std::vector<double> conservation_drift;  // NaN when undefined for the depth
  std::vector<std::vector<double>> bias_contributions;  // FC: layers 1..L per row
  OdeStatus status = OdeStatus::ReachedEnd;

  double final_loss() const { return loss.empty() ? 0.0 : loss.back(); }
  double final_leakage() const { return leakage.empty() ? 0.0 : leakage.back(); }
  double max_conservation_drift() const;
  bool loss_non_increasing(double slack = 1e-9) const;
};

// ---- diagonal linear network, canonical holdout (population loss) ----

struct DiagonalFlowConfig {
  int d = 5;
  int depth = 2;  // L >= 2
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::vector<double> target;  // length d+1: [f(empty), f({0}), ..., f({d-1})]
  int frozen_k = 0;
  double t_end = 2e5;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double loss_stop = 1e-10;
  int max_trace_points = 2000;
};

FlowTrace flow_diagonal(const DiagonalFlowConfig& cfg);

// ---- fully connected linear network ----

enum class FlowInit {
  GaussianDirections,  // alpha x fixed N(0, 1/fan_in) directions
  LayerUniform,        // alpha x U(+-1/sqrt(fan_in)) per layer
};

struct FcFlowConfig {
  std::vector<int> dims;  // d_0, d_1, ..., d_{L-1}; output dim is 1
  double alpha = 0.01;
  double gamma = 1.0;  // speed of the first layer's bias
  std::uint64_t seed = 0;
  Eigen::VectorXd w_star;  // length d_0
  double b_star = 0.0;
  FlowInit init = FlowInit::GaussianDirections;
  bool enforce_balance_condition = false;  // ||w2||^2 > ||W1||_F^2 + ||b1||^2 / gamma
  double t_end = 2e5;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double loss_stop = 1e-12;
  int max_trace_points = 2000;
};

struct FcFlowResult {
  FlowTrace trace;
  double final_loss = 0.0;
  double final_b1_norm = 0.0;
  std::vector<double> final_bias_contributions;  // layer 1..L
  double max_conservation_drift = 0.0;           // NaN for depth > 2
};

FcFlowResult flow_fc_linear(const FcFlowConfig& cfg);

// ---- frozen-bit training of the FC net (the canonical holdout itself) ----

struct FrozenBitConfig {
  std::vector<int> dims;  // d_0 includes the frozen coordinate
  double alpha = 0.01;
  std::uint64_t seed = 0;
  std::vector<double> target;  // length d_0+1: bias then per-coordinate weights
  int frozen_k = 0;
  FlowInit init = FlowInit::GaussianDirections;
  double t_end = 2e5;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double loss_stop = 1e-12;
  int max_trace_points = 2000;
};

struct FrozenBitReport {
  FlowTrace trace;
  double max_coupling_drift = 0.0;  // max_t ||(W_1k - b_1)(t) - (W_1k - b_1)(0)||_inf
  double final_frozen_coeff = 0.0;  // hat f_NN({k}) at the end
  double final_loss = 0.0;
};

FrozenBitReport frozen_bit_equivalence(const FrozenBitConfig& cfg);

}  // namespace gotu
