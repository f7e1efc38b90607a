// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace balign {

namespace {
Eigen::VectorXcd fallback_direction(int n) { return Eigen::VectorXcd::Unit(n, 0); }

double finish_episode(Environment& env, const Combiner& w) {
  StepResult res = env.step(w);
  if (!res.done) {
    throw std::logic_error("baseline: episode did not terminate on the final step");
  }
  return res.reward;
}
}  // namespace

double run_mrc_csi_episode(Environment& env, uint64_t episode_id) {
  env.reset(episode_id);
  const Combiner w = Combiner::normalized(env.channel().h);
  while (true) {
    const StepResult res = env.step(w);
    if (res.done) return res.reward;
  }
}

OmpEstimator::OmpEstimator(int n_rx, int num_probes, int grid_size, int iterations,
                           uint64_t seed, double angle_limit)
    : iterations_(iterations) {
  if (n_rx < 1 || num_probes < 1 || iterations < 1) {
    throw std::invalid_argument("OmpEstimator: counts must be >= 1");
  }
  if (grid_size < 2 || grid_size < n_rx) {
    throw std::invalid_argument("OmpEstimator: grid_size must be >= max(2, n_rx)");
  }
  if (num_probes < iterations) {
    throw std::invalid_argument("OmpEstimator: need at least as many probes as iterations");
  }
  if (!(angle_limit > 0.0)) {
    throw std::invalid_argument("OmpEstimator: angle_limit must be positive");
  }

  dict_.resize(n_rx, grid_size);
  for (int g = 0; g < grid_size; ++g) {
    const double theta =
        -angle_limit + 2.0 * angle_limit * static_cast<double>(g) / (grid_size - 1);
    dict_.col(g) = array_response(theta, n_rx);
  }

  probes_.reserve(num_probes);
  for (int j = 0; j < num_probes; ++j) {
    RandomGen rng = RandomGen::stream(seed, stream::kSensing, static_cast<uint64_t>(j));
    Eigen::VectorXcd v(n_rx);
    for (int k = 0; k < n_rx; ++k) v(k) = rng.complex_gaussian();
    probes_.push_back(Combiner::normalized(v));
  }

  phi_.resize(num_probes, grid_size);
  for (int j = 0; j < num_probes; ++j) {
    for (int g = 0; g < grid_size; ++g) {
      phi_(j, g) = probes_[j].w().dot(dict_.col(g));
    }
  }
  phi_col_norm_ = phi_.colwise().norm();
}

OmpEstimator::Estimate OmpEstimator::estimate(const Eigen::VectorXcd& y) const {
  if (y.size() != phi_.rows()) {
    throw std::invalid_argument("OmpEstimator::estimate: wrong measurement count");
  }
  Estimate est;
  est.h_hat = Eigen::VectorXcd::Zero(dict_.rows());
  if (y.norm() < 1e-15) {
    est.degenerate = true;
    return est;
  }

  const int grid = static_cast<int>(dict_.cols());
  const int max_iters = std::min(iterations_, grid);
  std::vector<int> support;
  std::vector<char> used(grid, 0);
  Eigen::VectorXcd residual = y;
  Eigen::VectorXcd coeffs;

  for (int it = 0; it < max_iters; ++it) {
    int best = -1;
    double best_score = 0.0;
    for (int g = 0; g < grid; ++g) {
      if (used[g] || phi_col_norm_(g) < 1e-12) continue;
      const double score = std::abs(phi_.col(g).dot(residual)) / phi_col_norm_(g);
      if (best < 0 || score > best_score) {
        best = g;
        best_score = score;
      }
    }
    if (best < 0) break;
    used[best] = 1;
    support.push_back(best);

    Eigen::MatrixXcd phi_s(phi_.rows(), support.size());
    for (size_t k = 0; k < support.size(); ++k) phi_s.col(k) = phi_.col(support[k]);
    coeffs = phi_s.colPivHouseholderQr().solve(y);
    residual = y - phi_s * coeffs;
  }

  for (size_t k = 0; k < support.size(); ++k) {
    est.h_hat += coeffs(static_cast<int>(k)) * dict_.col(support[k]);
  }
  return est;
}

double run_mrc_omp_episode(Environment& env, const OmpEstimator& omp, uint64_t episode_id) {
  const int num_probes = env.config().episode_steps - 1;
  if (static_cast<int>(omp.probes().size()) != num_probes) {
    throw std::invalid_argument("run_mrc_omp_episode: probe count must be episode_steps - 1");
  }
  env.reset(episode_id);
  Eigen::VectorXcd y(num_probes);
  for (int j = 0; j < num_probes; ++j) {
    const StepResult res = env.step(omp.probes()[j]);
    y(j) = std::complex<double>(res.obs.re, res.obs.im);
  }
  const OmpEstimator::Estimate est = omp.estimate(y);
  const Combiner w = (est.degenerate || !(est.h_hat.norm() > 0.0))
                         ? Combiner(fallback_direction(env.config().n_rx))
                         : Combiner::normalized(est.h_hat);
  return finish_episode(env, w);
}

double run_exhaustive_episode(Environment& env, const std::vector<Combiner>& codebook,
                              uint64_t episode_id) {
  if (static_cast<int>(codebook.size()) != env.config().episode_steps - 1) {
    throw std::invalid_argument("run_exhaustive_episode: codebook size must be episode_steps - 1");
  }
  env.reset(episode_id);
  int best = 0;
  double best_mag = -1.0;
  for (size_t j = 0; j < codebook.size(); ++j) {
    const StepResult res = env.step(codebook[j]);
    const double mag = std::hypot(res.obs.re, res.obs.im);
    if (mag > best_mag) {
      best_mag = mag;
      best = static_cast<int>(j);
    }
  }
  return finish_episode(env, codebook[static_cast<size_t>(best)]);
}

double run_random_episode(Environment& env, const ActionMapper& mapper, uint64_t episode_id,
                          RandomGen& rng) {
  env.reset(episode_id);
  const int dim = mapper.action_dim();
  while (true) {
    Eigen::VectorXd a(dim);
    if (mapper.kind() == ActionMapper::Kind::kDirect) {
      for (int i = 0; i < dim; ++i) a(i) = rng.uniform(-1.0, 1.0);
    } else {
      const double alpha_range = M_PI / 2.0 - kBetaFloor;
      a(0) = rng.uniform(-alpha_range, alpha_range);
      a(1) = rng.uniform(kBetaFloor, BeamSpec::beta_max(a(0)));
    }
    const StepResult res = env.step(mapper.to_combiner(a));
    if (res.done) return res.reward;
  }
}

}  // namespace balign
