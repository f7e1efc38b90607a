// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Classical reference methods, all driven through the same episodic
// environment as the learned agent: oracle maximum-ratio combining, greedy
// sparse channel estimation from random probes, codebook sweeping, and a
// uniform-random action floor.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "balign/array_model.hpp"
#include "balign/env.hpp"
#include "balign/policy.hpp"

namespace balign {

// Oracle matched filter w = h / ||h||: probes with it, finishes with it.
// Its terminal gain is identically one, which pins the reward scale.
double run_mrc_csi_episode(Environment& env, uint64_t episode_id);

// Greedy orthogonal-matching-pursuit channel estimator over a fixed angular
// dictionary, measured through random unit probes shared across episodes.
class OmpEstimator {
 public:
  struct Estimate {
    Eigen::VectorXcd h_hat;
    bool degenerate = false;  // all measurements numerically zero
  };

  // Dictionary: grid_size response vectors over [-angle_limit, angle_limit].
  // Probes: num_probes unit-normalized iid complex-Gaussian combiners drawn
  // from the sensing substream of `seed`.
  OmpEstimator(int n_rx, int num_probes, int grid_size, int iterations, uint64_t seed,
               double angle_limit = kAoaLimit);

  const std::vector<Combiner>& probes() const { return probes_; }
  int grid_size() const { return static_cast<int>(dict_.cols()); }

  // Greedy selection by normalized residual correlation with a full
  // least-squares refit over the chosen atoms after every pick.
  Estimate estimate(const Eigen::VectorXcd& y) const;

 private:
  int iterations_;
  Eigen::MatrixXcd dict_;  // (n_rx, grid) response vectors
  Eigen::MatrixXcd phi_;   // (probes, grid) probed dictionary
  Eigen::VectorXd phi_col_norm_;
  std::vector<Combiner> probes_;
};

// Probe with the estimator's sensing vectors, estimate the channel, finish
// with the normalized estimate (first basis vector if degenerate).
double run_mrc_omp_episode(Environment& env, const OmpEstimator& omp, uint64_t episode_id);

// Sweep the codebook (size must be episode_steps - 1), finish with the beam
// of largest received magnitude; ties keep the lowest index.
double run_exhaustive_episode(Environment& env, const std::vector<Combiner>& codebook,
                              uint64_t episode_id);

// Actions drawn uniformly from the squashed action box at every step; the
// no-learning floor for the learned agent.
double run_random_episode(Environment& env, const ActionMapper& mapper, uint64_t episode_id,
                          RandomGen& rng);

}  // namespace balign
