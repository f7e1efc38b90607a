// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Recurrent actor-critic used by the PPO agent: a GRU trunk over the
// observation stream, feedforward layers, an action-mean head, a scalar value
// head, and a state-independent learnable log-std. Actions are sampled from a
// diagonal Gaussian and squashed into the action box; log-probabilities carry
// the squash Jacobian correction.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "balign/beam_map.hpp"
#include "balign/env.hpp"
#include "balign/nn/graph.hpp"
#include "balign/nn/layers.hpp"

namespace balign {

// Squash + map from pre-activations to combiners for both action spaces.
class ActionMapper {
 public:
  enum class Kind { kDirect, kBeamforming };

  // Beamforming mode needs the (frozen) module that turns slices into
  // combiners; direct mode ignores it.
  ActionMapper(Kind kind, int n_rx, const BeamModule* module = nullptr);

  Kind kind() const { return kind_; }
  int n_rx() const { return n_rx_; }
  int action_dim() const;
  static const char* kind_name(Kind k);

  // Componentwise squash into the action box. Direct: tanh onto [-1, 1] per
  // component. Beamforming: alpha onto [-(pi/2 - betaFloor), +(pi/2 -
  // betaFloor)], then beta onto [betaFloor, beta_max(alpha)]; the shrunken
  // alpha range keeps the beta box non-degenerate.
  Eigen::VectorXd squash(const Eigen::VectorXd& u) const;

  // log |det d squash(u) / du|. The beta box depends on alpha, but the
  // Jacobian is triangular, so the determinant is the product of the
  // diagonal entries.
  double squash_log_jacobian(const Eigen::VectorXd& u) const;

  Combiner to_combiner(const Eigen::VectorXd& squashed) const;

 private:
  Kind kind_;
  int n_rx_;
  const BeamModule* module_;
};

struct PolicyArch {
  int obs_dim = 2;
  int gru_layers = 2;
  int ff_layers = 2;
  int width = 128;
  int action_dim = 4;

  void validate() const;
};

class PolicyNet {
 public:
  static constexpr double kLogStdLo = -20.0;
  static constexpr double kLogStdHi = 2.0;

  PolicyNet(PolicyArch arch, uint64_t init_seed, double log_std_init);

  const PolicyArch& arch() const { return arch_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  std::vector<nn::Var> initial_state(nn::Graph& g, int batch) const;

  struct StepOut {
    nn::Var mean;   // (B, action_dim)
    nn::Var value;  // (B, 1)
    std::vector<nn::Var> state;
  };
  StepOut forward_step(nn::Graph& g, nn::Var obs, const std::vector<nn::Var>& state) const;

  // Clamped log-std row (1, action_dim). The clamp keeps exp() finite under
  // extreme drift; its bounds are far outside useful exploration scales.
  nn::Var log_std(nn::Graph& g) const;

  // Rollout-exact per-sample log density of the pre-squash Gaussian:
  // (B, 1) from u (B, action_dim) against mean and log-std nodes. Both the
  // rollout and the re-unroll build this same subgraph, which is what makes
  // epoch-0 ratios exactly one.
  static nn::Var gaussian_logp(nn::Graph& g, nn::Var u_const, nn::Var mean, nn::Var log_std);

  // Single-step convenience (batch 1). Samples u (or takes the mean when
  // deterministic), squashes, and reports the Jacobian-corrected log-prob,
  // the value estimate, the next recurrent state, and the mapped combiner.
  struct ActResult {
    Eigen::VectorXd u;
    Eigen::VectorXd a;
    double logp = 0.0;
    double log_jac = 0.0;
    double value = 0.0;
    std::vector<Eigen::MatrixXd> state;
    Eigen::VectorXcd w;
  };
  ActResult act(const ActionMapper& mapper, const std::vector<Eigen::MatrixXd>& state,
                const Observation& obs, RandomGen& action_rng, bool deterministic = false) const;

 private:
  PolicyArch arch_;
  nn::ParamStore store_;
  nn::GruStack gru_;
  std::vector<nn::Linear> ff_;
  nn::Linear head_mean_;
  nn::Linear head_value_;
};

}  // namespace balign
