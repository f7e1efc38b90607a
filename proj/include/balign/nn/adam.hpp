// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <unordered_map>

#include "balign/nn/param_store.hpp"

namespace balign::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. First/second moment buffers mirror the store's
// arrays; they are exposed by name so checkpoints can round-trip optimizer
// state exactly.
class Adam {
 public:
  Adam(ParamStore& store, AdamConfig cfg);

  // One update from the store's current gradients. Rejects non-finite
  // gradients before touching any state.
  void step();

  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  AdamConfig& config() { return cfg_; }

  Eigen::MatrixXd& m(const std::string& name) { return moments_.at(name).m; }
  Eigen::MatrixXd& v(const std::string& name) { return moments_.at(name).v; }
  const Eigen::MatrixXd& m(const std::string& name) const { return moments_.at(name).m; }
  const Eigen::MatrixXd& v(const std::string& name) const { return moments_.at(name).v; }

 private:
  struct Moments {
    Eigen::MatrixXd m;
    Eigen::MatrixXd v;
  };
  ParamStore* store_;
  AdamConfig cfg_;
  std::unordered_map<std::string, Moments> moments_;
  int64_t t_ = 0;
};

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(ParamStore& store, double max_norm);

}  // namespace balign::nn
