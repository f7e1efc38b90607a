// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/array_model.hpp"

#include <cmath>
#include <stdexcept>

namespace balign {

namespace {
constexpr double kUnitNormTol = 1e-9;
}  // namespace

Combiner::Combiner(Eigen::VectorXcd w) : w_(std::move(w)) {
  if (w_.size() == 0) {
    throw std::invalid_argument("Combiner: empty vector");
  }
  if (std::abs(w_.norm() - 1.0) > kUnitNormTol) {
    throw std::invalid_argument("Combiner: vector is not unit norm");
  }
}

Combiner Combiner::normalized(const Eigen::VectorXcd& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("Combiner::normalized: zero or non-finite vector");
  }
  return Combiner(v / n);
}

Eigen::VectorXcd array_response(double phi, int n) {
  return psi_array_response(M_PI * std::sin(phi), n);
}

Eigen::VectorXcd psi_array_response(double psi, int n) {
  if (n < 1) {
    throw std::invalid_argument("psi_array_response: need at least one element");
  }
  Eigen::VectorXcd a(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k) {
    a(k) = std::polar(scale, psi * static_cast<double>(k));
  }
  return a;
}

Channel sample_channel(RandomGen& rng, int num_paths, int n) {
  if (num_paths < 1) {
    throw std::invalid_argument("sample_channel: need at least one path");
  }
  if (n < 1) {
    throw std::invalid_argument("sample_channel: need at least one antenna");
  }
  Channel ch;
  ch.gains.resize(num_paths);
  ch.aoas.resize(num_paths);
  ch.h = Eigen::VectorXcd::Zero(n);
  for (int l = 0; l < num_paths; ++l) {
    ch.gains(l) = rng.complex_gaussian();
    ch.aoas(l) = rng.uniform(-kAoaLimit, kAoaLimit);
    ch.h += ch.gains(l) * array_response(ch.aoas(l), n);
  }
  return ch;
}

double beamforming_gain(const Combiner& w, const Channel& ch) {
  if (w.size() != ch.n_rx()) {
    throw std::invalid_argument("beamforming_gain: combiner/channel size mismatch");
  }
  const double hnorm2 = ch.h.squaredNorm();
  if (!(hnorm2 > 0.0)) {
    throw std::invalid_argument("beamforming_gain: zero channel");
  }
  return std::norm(w.w().dot(ch.h)) / hnorm2;
}

double reference_gain(double theta, const Combiner& w) {
  const Eigen::VectorXcd a = array_response(theta, w.size());
  return std::norm(w.w().dot(a));
}

uint64_t hash_channel(const Channel& ch, uint64_t h) {
  for (int i = 0; i < ch.h.size(); ++i) {
    const double re = ch.h(i).real();
    const double im = ch.h(i).imag();
    h = fnv1a(&re, sizeof(re), h);
    h = fnv1a(&im, sizeof(im), h);
  }
  return h;
}

}  // namespace balign
