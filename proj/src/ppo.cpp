// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/ppo.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace balign {

void PpoConfig::validate() const {
  if (clip_ratio <= 0.0 || clip_ratio >= 1.0) {
    throw std::invalid_argument("PpoConfig: clip_ratio must be in (0, 1)");
  }
  if (value_coef < 0.0 || entropy_coef < 0.0) {
    throw std::invalid_argument("PpoConfig: loss coefficients must be >= 0");
  }
  if (gamma <= 0.0 || gamma > 1.0) {
    throw std::invalid_argument("PpoConfig: gamma must be in (0, 1]");
  }
  if (lr <= 0.0) throw std::invalid_argument("PpoConfig: lr must be positive");
  if (max_grad_norm <= 0.0) {
    throw std::invalid_argument("PpoConfig: max_grad_norm must be positive");
  }
  if (batch_episodes < 1 || minibatch_episodes < 1 || epochs < 1 || workers < 1) {
    throw std::invalid_argument("PpoConfig: counts must be >= 1");
  }
  if (batch_episodes % minibatch_episodes != 0) {
    throw std::invalid_argument("PpoConfig: minibatch size must divide the batch size");
  }
}

std::vector<EpisodeTrace> collect_rollouts(const EnvConfig& env_cfg, const PolicyNet& policy,
                                           const ActionMapper& mapper, int episodes,
                                           uint64_t first_episode_id, bool eval_streams,
                                           bool deterministic) {
  if (episodes < 1) {
    throw std::invalid_argument("collect_rollouts: episodes must be >= 1");
  }
  const PolicyArch& arch = policy.arch();
  if (mapper.action_dim() != arch.action_dim) {
    throw std::invalid_argument("collect_rollouts: mapper/arch action size mismatch");
  }
  const int big_b = episodes;
  const int steps = env_cfg.episode_steps;
  const int n_a = arch.action_dim;

  std::vector<Environment> envs;
  envs.reserve(big_b);
  std::vector<RandomGen> action_rngs;
  action_rngs.reserve(big_b);
  std::vector<EpisodeTrace> traces(big_b);
  for (int i = 0; i < big_b; ++i) {
    const uint64_t id = first_episode_id + static_cast<uint64_t>(i);
    envs.emplace_back(env_cfg, eval_streams);
    envs.back().reset(id);
    action_rngs.push_back(RandomGen::stream(env_cfg.seed, stream::kAction, id));
    EpisodeTrace& tr = traces[i];
    tr.episode_id = id;
    tr.obs = Eigen::MatrixXd::Zero(steps, 2);
    tr.u.resize(steps, n_a);
    tr.a.resize(steps, n_a);
    tr.logp.resize(steps);
    tr.log_jac.resize(steps);
    tr.value.resize(steps);
    tr.reward = Eigen::VectorXd::Zero(steps);
  }

  std::vector<Eigen::MatrixXd> state(arch.gru_layers,
                                     Eigen::MatrixXd::Zero(big_b, arch.width));
  Eigen::MatrixXd obs_now = Eigen::MatrixXd::Zero(big_b, 2);

  for (int t = 0; t < steps; ++t) {
    nn::Graph g(false);
    std::vector<nn::Var> svars;
    svars.reserve(state.size());
    for (const Eigen::MatrixXd& s : state) svars.push_back(g.constant(s));
    const PolicyNet::StepOut so = policy.forward_step(g, g.constant(obs_now), svars);
    const nn::Var lstd = policy.log_std(g);
    const Eigen::MatrixXd& mean = g.value(so.mean);
    const Eigen::VectorXd sigma = g.value(lstd).row(0).array().exp();

    Eigen::MatrixXd u(big_b, n_a);
    for (int i = 0; i < big_b; ++i) {
      for (int j = 0; j < n_a; ++j) {
        u(i, j) = deterministic ? mean(i, j)
                                : mean(i, j) + sigma(j) * action_rngs[i].gaussian();
      }
    }
    const nn::Var lp = PolicyNet::gaussian_logp(g, g.constant(u), so.mean, lstd);
    const Eigen::MatrixXd& lp_val = g.value(lp);
    const Eigen::MatrixXd& v_val = g.value(so.value);

    for (int i = 0; i < big_b; ++i) {
      EpisodeTrace& tr = traces[i];
      tr.obs.row(t) = obs_now.row(i);
      tr.u.row(t) = u.row(i);
      const Eigen::VectorXd ui = u.row(i);
      const Eigen::VectorXd ai = mapper.squash(ui);
      tr.a.row(t) = ai;
      tr.log_jac(t) = mapper.squash_log_jacobian(ui);
      tr.logp(t) = lp_val(i, 0) - tr.log_jac(t);
      tr.value(t) = v_val(i, 0);
      const StepResult sr = envs[i].step(mapper.to_combiner(ai));
      tr.reward(t) = sr.reward;
      obs_now(i, 0) = sr.obs.re;
      obs_now(i, 1) = sr.obs.im;
    }
    for (size_t l = 0; l < state.size(); ++l) state[l] = g.value(so.state[l]);
  }
  return traces;
}

void compute_returns(std::vector<EpisodeTrace>& traces, double gamma) {
  if (traces.empty()) {
    throw std::invalid_argument("compute_returns: empty batch");
  }
  double sum = 0.0;
  long count = 0;
  for (EpisodeTrace& tr : traces) {
    const int steps = static_cast<int>(tr.reward.size());
    tr.ret.resize(steps);
    tr.adv.resize(steps);
    double acc = 0.0;
    for (int t = steps - 1; t >= 0; --t) {
      acc = tr.reward(t) + gamma * acc;
      tr.ret(t) = acc;
      tr.adv(t) = acc - tr.value(t);
    }
    sum += tr.adv.sum();
    count += steps;
  }
  const double mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (const EpisodeTrace& tr : traces) {
    var += (tr.adv.array() - mean).square().sum();
  }
  const double sd = std::sqrt(var / static_cast<double>(count));
  for (EpisodeTrace& tr : traces) {
    tr.adv = (tr.adv.array() - mean) / (sd + 1e-8);
  }
}

PpoLossParts build_ppo_loss(nn::Graph& g, const PolicyNet& policy,
                            const std::vector<const EpisodeTrace*>& batch,
                            const PpoConfig& cfg) {
  if (batch.empty()) {
    throw std::invalid_argument("build_ppo_loss: empty minibatch");
  }
  const PolicyArch& arch = policy.arch();
  const int big_b = static_cast<int>(batch.size());
  const int steps = static_cast<int>(batch[0]->obs.rows());
  const int n_a = arch.action_dim;
  for (const EpisodeTrace* tr : batch) {
    if (tr->obs.rows() != steps || tr->u.cols() != n_a || tr->ret.size() != steps) {
      throw std::invalid_argument("build_ppo_loss: inconsistent or unscored trace");
    }
  }

  PpoLossParts parts;
  std::vector<nn::Var> state = policy.initial_state(g, big_b);
  const nn::Var lstd = policy.log_std(g);

  nn::Var surr_sum;
  nn::Var verr_sum;
  for (int t = 0; t < steps; ++t) {
    Eigen::MatrixXd obs(big_b, 2), u(big_b, n_a);
    Eigen::MatrixXd old_gauss(big_b, 1), adv(big_b, 1), ret(big_b, 1);
    for (int i = 0; i < big_b; ++i) {
      const EpisodeTrace& tr = *batch[i];
      obs.row(i) = tr.obs.row(t);
      u.row(i) = tr.u.row(t);
      // Behavior-policy Gaussian log-density; the squash Jacobian cancels in
      // the ratio because the action is unchanged.
      old_gauss(i, 0) = tr.logp(t) + tr.log_jac(t);
      adv(i, 0) = tr.adv(t);
      ret(i, 0) = tr.ret(t);
    }
    const PolicyNet::StepOut so = policy.forward_step(g, g.constant(std::move(obs)), state);
    state = so.state;
    const nn::Var gauss = PolicyNet::gaussian_logp(g, g.constant(std::move(u)), so.mean, lstd);
    const nn::Var ratio = g.exp(g.sub(gauss, g.constant(std::move(old_gauss))));
    parts.step_ratios.push_back(ratio);
    const nn::Var advc = g.constant(std::move(adv));
    const nn::Var surr =
        g.min(g.mul(ratio, advc),
              g.mul(g.clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio), advc));
    const nn::Var verr = g.square(g.sub(so.value, g.constant(std::move(ret))));
    surr_sum = surr_sum.valid() ? g.add(surr_sum, g.sum(surr)) : g.sum(surr);
    verr_sum = verr_sum.valid() ? g.add(verr_sum, g.sum(verr)) : g.sum(verr);
  }

  const double inv_n = 1.0 / (static_cast<double>(big_b) * static_cast<double>(steps));
  parts.policy = g.neg(g.scale(surr_sum, inv_n));
  parts.value_mse = g.scale(verr_sum, inv_n);
  // Entropy of the diagonal Gaussian trunk; the squash correction has no
  // closed form and is omitted from the bonus.
  parts.entropy =
      g.add_const(g.sum(lstd), 0.5 * static_cast<double>(n_a) * (1.0 + std::log(2.0 * M_PI)));
  parts.total = g.add(g.add(parts.policy, g.scale(parts.value_mse, cfg.value_coef)),
                      g.scale(parts.entropy, -cfg.entropy_coef));
  return parts;
}

UpdateStats ppo_update(PolicyNet& policy, nn::Adam& adam, const std::vector<EpisodeTrace>& traces,
                       const PpoConfig& cfg, uint64_t seed, uint64_t update_index) {
  cfg.validate();
  const int big_b = static_cast<int>(traces.size());
  if (big_b == 0 || big_b % cfg.minibatch_episodes != 0) {
    throw std::invalid_argument("ppo_update: batch not divisible into minibatches");
  }
  const int num_mb = big_b / cfg.minibatch_episodes;

  UpdateStats stats;
  for (const EpisodeTrace& tr : traces) stats.mean_reward += tr.terminal_reward();
  stats.mean_reward /= static_cast<double>(big_b);

  std::vector<int> order(traces.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    RandomGen shuf = RandomGen::stream(
        seed, stream::kShuffle, update_index * static_cast<uint64_t>(cfg.epochs) + epoch);
    for (int i = big_b - 1; i > 0; --i) {
      const int j = static_cast<int>(shuf.uniform() * (i + 1));
      std::swap(order[i], order[j]);
    }
    for (int mb = 0; mb < num_mb; ++mb) {
      std::vector<const EpisodeTrace*> batch(cfg.minibatch_episodes);
      for (int k = 0; k < cfg.minibatch_episodes; ++k) {
        batch[k] = &traces[order[mb * cfg.minibatch_episodes + k]];
      }
      nn::Graph g(true);
      const PpoLossParts parts = build_ppo_loss(g, policy, batch, cfg);
      if (epoch == 0 && mb == 0) {
        for (const nn::Var r : parts.step_ratios) {
          stats.ratio_dev_first =
              std::max(stats.ratio_dev_first, (g.value(r).array() - 1.0).abs().maxCoeff());
        }
      }
      policy.params().zero_grads();
      g.backward(parts.total);
      stats.grad_norm += nn::clip_global_norm(policy.params(), cfg.max_grad_norm);
      adam.step();
      ++stats.adam_steps;
      stats.policy_loss += g.scalar_value(parts.policy);
      stats.value_loss += g.scalar_value(parts.value_mse);
      stats.entropy += g.scalar_value(parts.entropy);
    }
  }
  const double inv_passes = 1.0 / static_cast<double>(stats.adam_steps);
  stats.policy_loss *= inv_passes;
  stats.value_loss *= inv_passes;
  stats.entropy *= inv_passes;
  stats.grad_norm *= inv_passes;
  return stats;
}

}  // namespace balign
