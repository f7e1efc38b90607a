// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace balign {

// Stateless 64-bit mixer (splitmix64 finalizer). Used to derive independent
// substream seeds from structured keys.
uint64_t mix64(uint64_t x);

// Combines up to four key words into one substream seed. Collisions between
// distinct keys are as unlikely as 64-bit hash collisions get.
uint64_t stream_key(uint64_t seed, uint64_t purpose, uint64_t index, uint64_t index2 = 0);

// Substream purposes. Every random draw in the project belongs to exactly one
// purpose so that runs are reproducible regardless of execution order or
// worker sharding.
namespace stream {
inline constexpr uint64_t kChannel = 1;      // channel realization per episode
inline constexpr uint64_t kNoise = 2;        // observation noise per episode
inline constexpr uint64_t kAction = 3;       // policy exploration noise per episode
inline constexpr uint64_t kParamInit = 4;    // network initialization
inline constexpr uint64_t kShuffle = 5;      // minibatch shuffling per update
inline constexpr uint64_t kBeamBatch = 6;    // beam-module training batches
inline constexpr uint64_t kEvalChannel = 7;  // evaluation channels (paired across methods)
inline constexpr uint64_t kEvalNoise = 8;    // evaluation noise (per method)
inline constexpr uint64_t kSensing = 9;      // compressive sensing probe vectors
inline constexpr uint64_t kOracle = 10;      // test-side Monte Carlo oracles
}  // namespace stream

// Deterministic generator: mt19937_64 engine with hand-rolled output
// transforms. The standard pins the engine's bit stream but not the library
// distributions, so uniforms and gaussians are derived here explicitly.
class RandomGen {
 public:
  explicit RandomGen(uint64_t seed) : gen_(seed) {}

  // Generator for one keyed substream.
  static RandomGen stream(uint64_t seed, uint64_t purpose, uint64_t index, uint64_t index2 = 0) {
    return RandomGen(stream_key(seed, purpose, index, index2));
  }

  uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one spare kept between calls.
  double gaussian();

  // Circularly symmetric complex normal, unit variance: each component N(0, 1/2).
  std::complex<double> complex_gaussian();

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// FNV-1a over raw bytes; used for config fingerprints and channel hashes.
uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull);

}  // namespace balign
