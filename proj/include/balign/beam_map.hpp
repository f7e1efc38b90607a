// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Action-to-combiner maps. The direct map treats the action vector as the
// stacked real and imaginary parts of the combiner. The beamforming map is a
// small DNN trained, independently of any agent, to emit a unit-norm combiner
// whose energy concentrates on a requested angular slice (center alpha,
// half-width beta), expressed in inter-element phase (psi) space.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "balign/array_model.hpp"
#include "balign/nn/adam.hpp"
#include "balign/nn/graph.hpp"
#include "balign/nn/layers.hpp"
#include "balign/rng.hpp"

namespace balign {

// Narrowest half-width the beamforming module is queried with at runtime;
// below this the training distribution has essentially no support.
inline constexpr double kBetaFloor = 0.5 * M_PI / 180.0;

// Angular slice: center alpha in [-pi/2, pi/2], half-width beta in
// (0, beta_max(alpha)].
struct BeamSpec {
  double alpha;
  double beta;

  BeamSpec(double alpha, double beta);
  static double beta_max(double alpha);
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

// Psi-space coverage of a spec: inside = [-pi, pi] intersected with
// [2(alpha-beta), 2(alpha+beta)], outside = the complement within [-pi, pi].
struct PsiRegions {
  std::vector<Interval> inside;   // exactly one interval
  std::vector<Interval> outside;  // zero, one, or two intervals

  double inside_measure() const;
  double outside_measure() const;
};

PsiRegions psi_intervals(const BeamSpec& spec);

// Alpha uniform over [-pi/2, pi/2]; beta uniform over (0, beta_max(alpha)].
BeamSpec sample_beam_spec(RandomGen& rng);

// Stacked-real action -> combiner: first half real parts, second half
// imaginary parts, scaled onto the unit sphere. Rejects the zero vector.
Combiner direct_map(const Eigen::VectorXd& a);

// DNN slice-to-combiner map: inputs (alpha, beta) scaled by 2/pi, outputs the
// stacked real/imag combiner entries, normalized outside the net.
class BeamModule {
 public:
  BeamModule(int n_rx, std::vector<int> hidden, uint64_t init_seed);

  int n_rx() const { return n_rx_; }
  const std::vector<int>& hidden() const { return hidden_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const nn::Mlp& net() const { return net_; }

  // Runtime query path: applies the beta floor, evaluates the net, and
  // normalizes. Throws if the net output collapses to zero.
  Combiner forward(const BeamSpec& spec) const;

 private:
  int n_rx_;
  std::vector<int> hidden_;
  nn::ParamStore store_;
  nn::Mlp net_;
};

// One training draw: a spec plus fixed psi samples for both regions. Holding
// the draw fixed makes the loss a deterministic function of the parameters,
// which the finite-difference checks rely on.
struct BeamBatchItem {
  BeamSpec spec;
  Eigen::VectorXd inside;   // psi angles, length K
  Eigen::VectorXd outside;  // psi angles, length K or empty
};
using BeamBatch = std::vector<BeamBatchItem>;

BeamBatch sample_beam_batch(RandomGen& rng, int batch_specs, int angles_per_region);

// Batch objective: reward modulus gain inside the slice, penalize mean and
// variance outside, with an epsilon-weighted variance regularizer inside.
// Specs with an empty outside region simply drop the outside terms.
nn::Var beam_loss(nn::Graph& g, BeamModule& module, const BeamBatch& batch, double epsilon);

struct BeamTrainConfig {
  int batch_specs = 1000;       // specs per update
  int angles_per_region = 1000; // psi samples per region per spec
  double epsilon = 1.0;         // inside-variance weight
  double lr = 1e-3;
  int updates = 5000;
  uint64_t seed = 1;

  void validate() const;
};

// Trains in place; returns the per-update loss curve. The optional callback
// runs after every update.
std::vector<double> train_beam_module(BeamModule& module, const BeamTrainConfig& cfg,
                                      const std::function<void(int, double)>& on_update = nullptr);

// The specs build_codebook feeds to the module: q equal slices of
// [sector_lo, sector_hi].
std::vector<BeamSpec> codebook_specs(int q, double sector_lo, double sector_hi);

// Equal-width codebook over a sector. Rejects slice half-widths below the
// runtime beta floor.
std::vector<Combiner> build_codebook(const BeamModule& module, int q, double sector_lo,
                                     double sector_hi);

}  // namespace balign
