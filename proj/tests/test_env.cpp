// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <limits>

#include "balign/env.hpp"
#include "doctest.h"

using namespace balign;

namespace {
EnvConfig small_cfg() {
  EnvConfig cfg;
  cfg.n_rx = 4;
  cfg.episode_steps = 5;
  cfg.num_paths = 1;
  cfg.snr_db = 20.0;
  cfg.seed = 9;
  return cfg;
}

Combiner unit_axis(int n, int k) { return Combiner(Eigen::VectorXcd::Unit(n, k)); }
}  // namespace

TEST_CASE("config validation") {
  EnvConfig cfg = small_cfg();
  cfg.n_rx = 0;
  CHECK_THROWS(cfg.validate());
  cfg = small_cfg();
  cfg.episode_steps = 1;
  CHECK_THROWS(cfg.validate());
  cfg = small_cfg();
  cfg.num_paths = 0;
  CHECK_THROWS(cfg.validate());
  cfg = small_cfg();
  cfg.snr_db = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("noise variance follows the SNR in dB") {
  EnvConfig cfg = small_cfg();
  cfg.snr_db = 20.0;
  CHECK(cfg.noise_variance() == doctest::Approx(0.01).epsilon(1e-12));
  cfg.snr_db = 0.0;
  CHECK(cfg.noise_variance() == doctest::Approx(1.0).epsilon(1e-12));
  cfg.snr_db = std::numeric_limits<double>::infinity();
  CHECK(cfg.noise_variance() == 0.0);
}

TEST_CASE("episode lifecycle and termination") {
  Environment env(small_cfg());
  CHECK_THROWS(env.step(unit_axis(4, 0)));  // not reset yet
  CHECK_THROWS(env.channel());

  env.reset(0);
  for (int t = 0; t < 4; ++t) {
    const StepResult r = env.step(unit_axis(4, 0));
    CHECK_FALSE(r.done);
    CHECK(r.reward == 0.0);
  }
  const StepResult last = env.step(unit_axis(4, 0));
  CHECK(last.done);
  CHECK(last.reward >= 0.0);
  CHECK(last.reward <= 1.0 + 1e-12);
  CHECK(last.obs.re == 0.0);
  CHECK(last.obs.im == 0.0);
  CHECK_THROWS(env.step(unit_axis(4, 0)));  // episode over
}

TEST_CASE("combiner size is checked") {
  Environment env(small_cfg());
  env.reset(1);
  CHECK_THROWS(env.step(unit_axis(5, 0)));
}

TEST_CASE("noiseless observations equal the probed projection exactly") {
  EnvConfig cfg = small_cfg();
  cfg.snr_db = std::numeric_limits<double>::infinity();
  Environment env(cfg);
  env.reset(3);
  const Channel& ch = env.channel();
  const Combiner w = Combiner::normalized(Eigen::VectorXcd::Ones(4));
  const StepResult r = env.step(w);
  const std::complex<double> expected = w.w().dot(ch.h);
  CHECK(r.obs.re == doctest::Approx(expected.real()).epsilon(1e-14));
  CHECK(r.obs.im == doctest::Approx(expected.imag()).epsilon(1e-14));
}

TEST_CASE("terminal reward equals the final combiner's gain") {
  Environment env(small_cfg());
  env.reset(5);
  const Combiner mrc = Combiner::normalized(env.channel().h);
  for (int t = 0; t < 4; ++t) env.step(unit_axis(4, t % 4));
  const StepResult last = env.step(mrc);
  CHECK(last.reward == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("episode ids replay channels and noise exactly") {
  Environment a(small_cfg());
  Environment b(small_cfg());
  a.reset(77);
  b.reset(77);
  CHECK((a.channel().h - b.channel().h).norm() == 0.0);
  const Combiner w = Combiner::normalized(Eigen::VectorXcd::Ones(4));
  const StepResult ra = a.step(w);
  const StepResult rb = b.step(w);
  CHECK(ra.obs.re == rb.obs.re);
  CHECK(ra.obs.im == rb.obs.im);

  b.reset(78);
  CHECK((a.channel().h - b.channel().h).norm() > 0.0);
}

TEST_CASE("noise power matches the configured variance") {
  EnvConfig cfg = small_cfg();
  cfg.snr_db = 0.0;  // unit noise variance
  Environment env(cfg);
  const Combiner w = unit_axis(4, 0);
  double vr = 0.0, vi = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    env.reset(static_cast<uint64_t>(i));
    const std::complex<double> clean = w.w().dot(env.channel().h);
    const StepResult r = env.step(w);
    const double dr = r.obs.re - clean.real();
    const double di = r.obs.im - clean.imag();
    vr += dr * dr;
    vi += di * di;
  }
  CHECK(vr / n == doctest::Approx(0.5).epsilon(0.05));
  CHECK(vi / n == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("evaluation substreams are disjoint from training ones") {
  Environment train(small_cfg());
  Environment eval(small_cfg(), /*eval_streams=*/true);
  train.reset(0);
  eval.reset(0);
  CHECK((train.channel().h - eval.channel().h).norm() > 0.0);

  Environment eval2(small_cfg(), /*eval_streams=*/true);
  eval2.reset(0);
  CHECK((eval.channel().h - eval2.channel().h).norm() == 0.0);
}
