// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/env.hpp"

#include <stdexcept>

namespace balign {

void EnvConfig::validate() const {
  if (n_rx < 1) throw std::invalid_argument("EnvConfig: n_rx must be >= 1");
  if (episode_steps < 2) throw std::invalid_argument("EnvConfig: episode_steps must be >= 2");
  if (num_paths < 1) throw std::invalid_argument("EnvConfig: num_paths must be >= 1");
  if (std::isnan(snr_db)) throw std::invalid_argument("EnvConfig: snr_db must not be NaN");
}

Environment::Environment(const EnvConfig& cfg, bool eval_streams)
    : cfg_(cfg),
      channel_purpose_(eval_streams ? stream::kEvalChannel : stream::kChannel),
      noise_purpose_(eval_streams ? stream::kEvalNoise : stream::kNoise),
      noise_rng_(0) {
  cfg_.validate();
}

Observation Environment::reset(uint64_t episode_id) {
  episode_id_ = episode_id;
  RandomGen ch_rng = RandomGen::stream(cfg_.seed, channel_purpose_, episode_id);
  ch_ = sample_channel(ch_rng, cfg_.num_paths, cfg_.n_rx);
  noise_rng_ = RandomGen::stream(cfg_.seed, noise_purpose_, episode_id);
  t_ = 0;
  done_ = false;
  started_ = true;
  return Observation{};
}

StepResult Environment::step(const Combiner& w) {
  if (!started_ || done_) {
    throw std::logic_error("Environment::step: episode not active");
  }
  if (w.size() != cfg_.n_rx) {
    throw std::invalid_argument("Environment::step: combiner size mismatch");
  }

  StepResult res;
  if (t_ == cfg_.episode_steps - 1) {
    res.reward = beamforming_gain(w, ch_);
    res.done = true;
    done_ = true;
  } else {
    std::complex<double> y = w.w().dot(ch_.h);
    const double sigma2 = cfg_.noise_variance();
    if (sigma2 > 0.0) {
      // w^H n with n ~ CN(0, sigma2 I) collapses to one CN(0, sigma2) draw
      // because ||w|| = 1.
      y += std::sqrt(sigma2) * noise_rng_.complex_gaussian();
    }
    res.obs = Observation{y.real(), y.imag()};
  }
  ++t_;
  return res;
}

const Channel& Environment::channel() const {
  if (!started_) {
    throw std::logic_error("Environment::channel: no episode started");
  }
  return ch_;
}

}  // namespace balign
