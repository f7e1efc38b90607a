// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Clipped-surrogate policy optimization over full episodes. Rollouts run all
// episodes of a batch in lockstep so each policy step is one batched matrix
// product; updates re-unroll whole episodes per minibatch so the recurrent
// state is always consistent with the current parameters.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "balign/env.hpp"
#include "balign/nn/adam.hpp"
#include "balign/nn/graph.hpp"
#include "balign/policy.hpp"

namespace balign {

struct PpoConfig {
  double clip_ratio = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 1e-3;
  double gamma = 1.0;
  double lr = 3e-4;
  double max_grad_norm = 0.5;
  int batch_episodes = 2000;
  int minibatch_episodes = 500;
  int epochs = 4;
  // Parallel-environment count. Lockstep batching already simulates every
  // episode of the batch concurrently, so this is a pure capacity label and
  // never changes results.
  int workers = 2000;
  double log_std_init = -0.6931471805599453;  // log(0.5)

  void validate() const;
};

// One complete episode as seen by the agent. Rows are timesteps; all steps
// carry an action, and only the last one carries reward.
struct EpisodeTrace {
  uint64_t episode_id = 0;
  Eigen::MatrixXd obs;      // (T, 2) inputs, row 0 is the zero reset symbol
  Eigen::MatrixXd u;        // (T, action_dim) pre-squash samples
  Eigen::MatrixXd a;        // (T, action_dim) squashed actions
  Eigen::VectorXd logp;     // (T) Jacobian-corrected behavior log-probs
  Eigen::VectorXd log_jac;  // (T) squash Jacobian log-determinants
  Eigen::VectorXd value;    // (T) critic estimates at collection time
  Eigen::VectorXd reward;   // (T) zero except the terminal entry
  Eigen::VectorXd ret;      // (T) discounted returns (filled by compute_returns)
  Eigen::VectorXd adv;      // (T) normalized advantages (filled by compute_returns)

  double terminal_reward() const { return reward(reward.size() - 1); }
};

// Simulates `episodes` episodes with ids [first_episode_id, +episodes) in
// lockstep under the current policy. Every per-episode random draw comes from
// a stream keyed by the episode id, so a batch's traces are independent of
// how it is scheduled. `eval_streams` switches to the held-out paired
// channel/noise substreams; `deterministic` takes the action mean instead of
// sampling.
std::vector<EpisodeTrace> collect_rollouts(const EnvConfig& env_cfg, const PolicyNet& policy,
                                           const ActionMapper& mapper, int episodes,
                                           uint64_t first_episode_id, bool eval_streams = false,
                                           bool deterministic = false);

// Fills ret with discounted reward-to-go and adv with return-minus-value,
// then normalizes advantages to zero mean and unit standard deviation across
// every step of the whole batch.
void compute_returns(std::vector<EpisodeTrace>& traces, double gamma);

// Loss of one minibatch: clipped surrogate plus value regression minus the
// entropy bonus. `step_ratios` exposes the per-step probability-ratio nodes
// so callers can check that a freshly collected batch starts at ratio one.
struct PpoLossParts {
  nn::Var total;
  nn::Var policy;     // clipped surrogate (to minimize)
  nn::Var value_mse;  // mean squared value error, without the 0.5 coefficient
  nn::Var entropy;    // Gaussian trunk entropy, shared across the batch
  std::vector<nn::Var> step_ratios;  // (B, 1) per timestep
};
PpoLossParts build_ppo_loss(nn::Graph& g, const PolicyNet& policy,
                            const std::vector<const EpisodeTrace*>& batch,
                            const PpoConfig& cfg);

struct UpdateStats {
  double mean_reward = 0.0;   // mean terminal reward of the batch
  double policy_loss = 0.0;   // averages over all minibatch passes
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;     // mean pre-clip gradient norm
  double ratio_dev_first = 0.0;  // max |ratio - 1| on the first pass
  int adam_steps = 0;
};

// One optimization round over an already-scored batch: `epochs` passes, each
// over a fresh keyed shuffle of the episodes, split into minibatches that are
// re-unrolled and stepped independently. `update_index` keys the shuffles.
UpdateStats ppo_update(PolicyNet& policy, nn::Adam& adam, const std::vector<EpisodeTrace>& traces,
                       const PpoConfig& cfg, uint64_t seed, uint64_t update_index);

}  // namespace balign
