// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Episodic initial-access environment. The channel is drawn once per episode
// and frozen; the agent probes with unit-norm combiners, observes one noisy
// complex symbol per probe, and is scored once, on the last step, by the
// normalized gain of its final combiner.

#pragma once

#include <cmath>
#include <cstdint>

#include "balign/array_model.hpp"
#include "balign/rng.hpp"

namespace balign {

struct EnvConfig {
  int n_rx = 32;          // receive antennas
  int episode_steps = 5;  // total actions per episode (probes + final choice)
  int num_paths = 1;      // multipath components
  double snr_db = 20.0;   // per-antenna SNR; +inf disables noise
  uint64_t seed = 1;      // master seed for channel/noise substreams

  double noise_variance() const { return std::pow(10.0, -snr_db / 10.0); }
  void validate() const;
};

struct Observation {
  double re = 0.0;
  double im = 0.0;
};

struct StepResult {
  Observation obs;  // zeros on the terminal step (nothing left to observe)
  double reward = 0.0;
  bool done = false;
};

class Environment {
 public:
  // With eval_streams set, channels and noise come from the evaluation
  // substreams instead of the training ones, so evaluation episode ids form
  // a method-independent paired set disjoint from anything seen in training.
  explicit Environment(const EnvConfig& cfg, bool eval_streams = false);

  // Starts episode `episode_id`: draws the channel from the keyed channel
  // substream, re-keys the noise substream, returns the (zero) initial
  // observation. Episode ids are the reproducibility unit; reusing an id
  // replays the same channel and noise.
  Observation reset(uint64_t episode_id);

  // Applies one combiner. Intermediate steps return the noisy received
  // symbol and zero reward; the final step returns the terminal gain.
  StepResult step(const Combiner& w);

  const EnvConfig& config() const { return cfg_; }
  const Channel& channel() const;  // oracle access for baselines and tests
  int t() const { return t_; }
  bool done() const { return done_; }
  uint64_t episode_id() const { return episode_id_; }

 private:
  EnvConfig cfg_;
  uint64_t channel_purpose_;
  uint64_t noise_purpose_;
  Channel ch_;
  RandomGen noise_rng_;
  uint64_t episode_id_ = 0;
  int t_ = 0;
  bool done_ = true;  // must reset before stepping
  bool started_ = false;
};

}  // namespace balign
