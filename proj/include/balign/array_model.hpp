// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Geometric channel and uniform-linear-array response math shared by the
// environment, the beam maps, and the classical baselines.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "balign/rng.hpp"

namespace balign {

// Angular support of arriving paths; classical estimators reuse it as their
// dictionary span.
inline constexpr double kAoaLimit = M_PI / 3.0;  // 60 degrees

// Frozen multipath realization: h = sum_l gains[l] * a(aoas[l]).
struct Channel {
  Eigen::VectorXcd gains;  // complex path gains, CN(0, 1) each
  Eigen::VectorXd aoas;    // angles of arrival, radians, within +/- 60 deg
  Eigen::VectorXcd h;      // assembled channel vector, length n_rx

  int num_paths() const { return static_cast<int>(gains.size()); }
  int n_rx() const { return static_cast<int>(h.size()); }
};

// Unit-norm receive combining vector. Construction validates the norm so the
// rest of the code can rely on it.
class Combiner {
 public:
  explicit Combiner(Eigen::VectorXcd w);

  // Scales an arbitrary nonzero vector onto the unit sphere.
  static Combiner normalized(const Eigen::VectorXcd& v);

  const Eigen::VectorXcd& w() const { return w_; }
  int size() const { return static_cast<int>(w_.size()); }

 private:
  Eigen::VectorXcd w_;
};

// Half-wavelength ULA response, element k = exp(j*pi*k*sin(phi)) / sqrt(n).
Eigen::VectorXcd array_response(double phi, int n);

// Response parameterized directly by the inter-element phase:
// element k = exp(j*k*psi) / sqrt(n). Identical to array_response when
// psi = pi * sin(phi).
Eigen::VectorXcd psi_array_response(double psi, int n);

// Draws a channel with num_paths iid CN(0,1) gains and AoAs uniform on
// [-60 deg, +60 deg].
Channel sample_channel(RandomGen& rng, int num_paths, int n);

// Normalized combining gain |w^H h|^2 / ||h||^2 in [0, 1]; 1 iff w is the
// matched filter direction.
double beamforming_gain(const Combiner& w, const Channel& ch);

// Single-direction gain |w^H a(theta)|^2 used for beam pattern plots and
// coverage oracles.
double reference_gain(double theta, const Combiner& w);

// Order-sensitive hash over the channel vector's raw bits; lets evaluation
// verify that methods saw identical channel draws.
uint64_t hash_channel(const Channel& ch, uint64_t h = 0xcbf29ce484222325ull);

}  // namespace balign
