// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "balign/beam_map.hpp"
#include "balign/env.hpp"
#include "balign/nn/adam.hpp"
#include "balign/policy.hpp"
#include "balign/ppo.hpp"
#include "balign/rng.hpp"
#include "common/fd_check.hpp"
#include "doctest.h"

using namespace balign;

namespace {

PolicyArch tiny_arch(int action_dim) {
  PolicyArch arch;
  arch.obs_dim = 2;
  arch.gru_layers = 1;
  arch.ff_layers = 1;
  arch.width = 8;
  arch.action_dim = action_dim;
  return arch;
}

std::vector<Eigen::MatrixXd> zero_state(const PolicyArch& arch) {
  return std::vector<Eigen::MatrixXd>(arch.gru_layers, Eigen::MatrixXd::Zero(1, arch.width));
}

double normal_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

}  // namespace

TEST_CASE("optimization config rejects out-of-range settings") {
  PpoConfig good;
  good.batch_episodes = 8;
  good.minibatch_episodes = 4;
  CHECK_NOTHROW(good.validate());

  PpoConfig c = good;
  c.clip_ratio = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good;
  c.clip_ratio = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good;
  c.value_coef = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good;
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good;
  c.gamma = 1.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good;
  c.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good;
  c.max_grad_norm = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good;
  c.minibatch_episodes = 3;  // does not divide 8
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good;
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good;
  c.workers = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("returns follow the discounted backward recursion") {
  std::vector<EpisodeTrace> traces(2);
  const double R = 0.7;
  for (int i = 0; i < 2; ++i) {
    traces[i].reward = Eigen::VectorXd::Zero(3);
    traces[i].value = Eigen::VectorXd::Zero(3);
  }
  traces[0].reward(2) = R;
  traces[1].reward(2) = 0.2;
  traces[1].value << 0.1, 0.2, 0.3;

  compute_returns(traces, 0.9);

  CHECK(traces[0].ret(0) == doctest::Approx(0.81 * R).epsilon(1e-12));
  CHECK(traces[0].ret(1) == doctest::Approx(0.9 * R).epsilon(1e-12));
  CHECK(traces[0].ret(2) == doctest::Approx(R).epsilon(1e-12));

  double mean = 0.0, var = 0.0;
  for (const EpisodeTrace& tr : traces) mean += tr.adv.sum();
  mean /= 6.0;
  for (const EpisodeTrace& tr : traces) var += (tr.adv.array() - mean).square().sum();
  CHECK(std::abs(mean) < 1e-9);
  CHECK(std::sqrt(var / 6.0) == doctest::Approx(1.0).epsilon(1e-6));

  std::vector<EpisodeTrace> none;
  CHECK_THROWS_AS(compute_returns(none, 1.0), std::invalid_argument);
}

TEST_CASE("rollout collection is a pure function of seed and episode ids") {
  EnvConfig env;
  env.n_rx = 2;
  env.episode_steps = 3;
  env.num_paths = 1;
  env.snr_db = 10.0;
  env.seed = 5;

  PolicyNet policy(tiny_arch(4), 77, std::log(0.5));
  ActionMapper mapper(ActionMapper::Kind::kDirect, 2);

  const auto a = collect_rollouts(env, policy, mapper, 4, 100);
  const auto b = collect_rollouts(env, policy, mapper, 4, 100);
  const auto c = collect_rollouts(env, policy, mapper, 4, 200);

  REQUIRE(a.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(a[i].episode_id == 100 + static_cast<uint64_t>(i));
    CHECK((a[i].u - b[i].u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a[i].obs - b[i].obs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a[i].reward - b[i].reward).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a[i].logp - b[i].logp).cwiseAbs().maxCoeff() == 0.0);
  }
  bool any_diff = false;
  for (int i = 0; i < 4; ++i) {
    any_diff = any_diff || (a[i].u - c[i].u).cwiseAbs().maxCoeff() > 0.0;
  }
  CHECK(any_diff);

  // The first observation is the reset symbol; only the last step is scored.
  for (const EpisodeTrace& tr : a) {
    CHECK(tr.obs.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(tr.reward.head(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(tr.terminal_reward() >= 0.0);
    CHECK(tr.terminal_reward() <= 1.0);
  }
}

TEST_CASE("the recorded terminal reward is the gain of the final combiner") {
  EnvConfig env;
  env.n_rx = 2;
  env.episode_steps = 3;
  env.num_paths = 1;
  env.snr_db = std::numeric_limits<double>::infinity();
  env.seed = 11;

  PolicyNet policy(tiny_arch(4), 31, std::log(0.5));
  ActionMapper mapper(ActionMapper::Kind::kDirect, 2);
  const auto traces = collect_rollouts(env, policy, mapper, 3, 40);

  for (const EpisodeTrace& tr : traces) {
    RandomGen ch_rng = RandomGen::stream(env.seed, stream::kChannel, tr.episode_id);
    const Channel ch = sample_channel(ch_rng, env.num_paths, env.n_rx);
    const Combiner w = mapper.to_combiner(tr.a.row(env.episode_steps - 1));
    CHECK(tr.terminal_reward() == doctest::Approx(beamforming_gain(w, ch)).epsilon(1e-12));
  }
}

TEST_CASE("probability ratios start at one on a freshly collected batch") {
  EnvConfig env;
  env.n_rx = 2;
  env.episode_steps = 3;
  env.num_paths = 1;
  env.snr_db = 10.0;
  env.seed = 3;

  PolicyNet policy(tiny_arch(4), 13, std::log(0.5));
  ActionMapper mapper(ActionMapper::Kind::kDirect, 2);

  PpoConfig cfg;
  cfg.batch_episodes = 8;
  cfg.minibatch_episodes = 8;
  cfg.epochs = 1;
  cfg.workers = 2;

  auto traces = collect_rollouts(env, policy, mapper, cfg.batch_episodes, 0);
  compute_returns(traces, cfg.gamma);

  nn::Adam adam(policy.params(), {cfg.lr, 0.9, 0.999, 1e-8});
  const UpdateStats stats = ppo_update(policy, adam, traces, cfg, env.seed, 0);

  CHECK(stats.ratio_dev_first < 1e-9);
  CHECK(stats.adam_steps == 1);
  CHECK(stats.mean_reward >= 0.0);
  CHECK(stats.mean_reward <= 1.0);
  CHECK(std::isfinite(stats.policy_loss));
  CHECK(stats.grad_norm > 0.0);
}

TEST_CASE("surrogate loss gradients agree with central differences") {
  EnvConfig env;
  env.n_rx = 2;
  env.episode_steps = 3;
  env.num_paths = 1;
  env.snr_db = 10.0;
  env.seed = 21;

  PolicyNet policy(tiny_arch(4), 19, std::log(0.5));
  ActionMapper mapper(ActionMapper::Kind::kDirect, 2);

  auto traces = collect_rollouts(env, policy, mapper, 4, 0);
  compute_returns(traces, 1.0);
  std::vector<const EpisodeTrace*> batch;
  for (const EpisodeTrace& tr : traces) batch.push_back(&tr);

  PpoConfig cfg;
  cfg.batch_episodes = 4;
  cfg.minibatch_episodes = 4;

  const auto eval_loss = [&]() {
    nn::Graph g(false);
    return g.scalar_value(build_ppo_loss(g, policy, batch, cfg).total);
  };
  const auto run_backward = [&]() {
    nn::Graph g;
    const nn::Var loss = build_ppo_loss(g, policy, batch, cfg).total;
    policy.params().zero_grads();
    g.backward(loss);
    return g.scalar_value(loss);
  };

  RandomGen pick = RandomGen::stream(21, stream::kOracle, 3);
  const auto report = testing::fd_check(policy.params(), run_backward, eval_loss, 50, 1e-5, pick);
  INFO("worst coordinate: ", report.worst_coord);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("entropy term matches the diagonal gaussian closed form") {
  EnvConfig env;
  env.n_rx = 2;
  env.episode_steps = 2;
  env.num_paths = 1;
  env.snr_db = 10.0;
  env.seed = 9;

  const double log_std_init = std::log(0.5);
  PolicyNet policy(tiny_arch(4), 23, log_std_init);
  ActionMapper mapper(ActionMapper::Kind::kDirect, 2);

  auto traces = collect_rollouts(env, policy, mapper, 2, 0);
  compute_returns(traces, 1.0);
  std::vector<const EpisodeTrace*> batch{&traces[0], &traces[1]};

  nn::Graph g(false);
  const PpoLossParts parts = build_ppo_loss(g, policy, batch, PpoConfig{});
  const double n_a = 4.0;
  const double want = n_a * log_std_init + 0.5 * n_a * (1.0 + std::log(2.0 * M_PI));
  CHECK(g.scalar_value(parts.entropy) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("single-step acting is deterministic given the stream state") {
  PolicyNet policy(tiny_arch(4), 55, std::log(0.5));
  ActionMapper mapper(ActionMapper::Kind::kDirect, 2);
  const Observation obs{0.12, -0.5};
  const auto state = zero_state(policy.arch());

  RandomGen r1 = RandomGen::stream(1, stream::kAction, 9);
  RandomGen r2 = RandomGen::stream(1, stream::kAction, 9);
  const auto a1 = policy.act(mapper, state, obs, r1);
  const auto a2 = policy.act(mapper, state, obs, r2);
  CHECK((a1.u - a2.u).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a1.logp == a2.logp);
  CHECK(a1.value == a2.value);
  CHECK((a1.w - a2.w).cwiseAbs().maxCoeff() == 0.0);

  // A different stream position draws different exploration noise.
  const auto a3 = policy.act(mapper, state, obs, r1);
  CHECK((a1.u - a3.u).cwiseAbs().maxCoeff() > 0.0);

  // Deterministic mode ignores the stream entirely.
  RandomGen r4 = RandomGen::stream(2, stream::kAction, 1000);
  RandomGen r5 = RandomGen::stream(3, stream::kAction, 2000);
  const auto d1 = policy.act(mapper, state, obs, r4, true);
  const auto d2 = policy.act(mapper, state, obs, r5, true);
  CHECK((d1.u - d2.u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("an extreme log-std is clamped so samples collapse onto the mean") {
  PolicyNet policy(tiny_arch(4), 3, -40.0);  // stored below the clamp floor
  ActionMapper mapper(ActionMapper::Kind::kDirect, 2);
  const Observation obs{0.3, 0.1};
  const auto state = zero_state(policy.arch());

  RandomGen rng = RandomGen::stream(4, stream::kAction, 0);
  const auto sampled = policy.act(mapper, state, obs, rng);
  RandomGen unused = RandomGen::stream(4, stream::kAction, 1);
  const auto det = policy.act(mapper, state, obs, unused, true);

  // sigma = exp(-20) after clamping, so the noise is invisibly small.
  CHECK((sampled.u - det.u).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("squashed direct density integrates to one over its box") {
  ActionMapper mapper(ActionMapper::Kind::kDirect, 1);
  REQUIRE(mapper.action_dim() == 2);
  const Eigen::Vector2d mu(0.3, -0.2);
  const Eigen::Vector2d sigma(0.5, 0.8);

  const int cells = 200;
  const double da = 2.0 / cells;
  double integral = 0.0;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      Eigen::VectorXd a(2);
      a << -1.0 + (i + 0.5) * da, -1.0 + (j + 0.5) * da;
      Eigen::VectorXd u(2);
      u << std::atanh(a(0)), std::atanh(a(1));
      const double pu = normal_density(u(0), mu(0), sigma(0)) * normal_density(u(1), mu(1), sigma(1));
      integral += pu * std::exp(-mapper.squash_log_jacobian(u)) * da * da;
    }
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("squashed slice density integrates to one over the slice region") {
  BeamModule module(2, {8}, 1);
  ActionMapper mapper(ActionMapper::Kind::kBeamforming, 2, &module);
  REQUIRE(mapper.action_dim() == 2);
  const double alpha_range = M_PI / 2 - kBetaFloor;
  const Eigen::Vector2d mu(0.1, -0.4);
  const Eigen::Vector2d sigma(0.9, 0.7);

  const int cells = 300;
  const double dalpha = 2.0 * alpha_range / cells;
  const double dtau = 2.0 / cells;
  double integral = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double alpha = -alpha_range + (i + 0.5) * dalpha;
    const double width = BeamSpec::beta_max(alpha) - kBetaFloor;
    for (int j = 0; j < cells; ++j) {
      const double tau = -1.0 + (j + 0.5) * dtau;  // beta = floor + width*(tau+1)/2
      Eigen::VectorXd u(2);
      u << std::atanh(alpha / alpha_range), std::atanh(tau);
      const double pu = normal_density(u(0), mu(0), sigma(0)) * normal_density(u(1), mu(1), sigma(1));
      const double p_a = pu * std::exp(-mapper.squash_log_jacobian(u));
      integral += p_a * dalpha * (width * 0.5) * dtau;
    }
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("poisoned parameters surface as a non-finite loss error") {
  EnvConfig env;
  env.n_rx = 2;
  env.episode_steps = 2;
  env.num_paths = 1;
  env.snr_db = 10.0;
  env.seed = 2;

  PolicyNet policy(tiny_arch(4), 7, std::log(0.5));
  ActionMapper mapper(ActionMapper::Kind::kDirect, 2);

  PpoConfig cfg;
  cfg.batch_episodes = 2;
  cfg.minibatch_episodes = 2;
  cfg.epochs = 1;
  cfg.workers = 1;

  auto traces = collect_rollouts(env, policy, mapper, 2, 0);
  compute_returns(traces, 1.0);

  const std::string first = policy.params().names().front();
  policy.params().value(first)(0, 0) = std::numeric_limits<double>::quiet_NaN();

  nn::Adam adam(policy.params(), {cfg.lr, 0.9, 0.999, 1e-8});
  CHECK_THROWS_AS(ppo_update(policy, adam, traces, cfg, env.seed, 0), nn::NonFiniteError);
}
