// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/nn/adam.hpp"

#include <cmath>

#include "balign/nn/graph.hpp"

namespace balign::nn {

Adam::Adam(ParamStore& store, AdamConfig cfg) : store_(&store), cfg_(cfg) {
  for (const auto& name : store.names()) {
    const Eigen::MatrixXd& v = store.value(name);
    Moments mo;
    mo.m = Eigen::MatrixXd::Zero(v.rows(), v.cols());
    mo.v = Eigen::MatrixXd::Zero(v.rows(), v.cols());
    moments_.emplace(name, std::move(mo));
  }
}

void Adam::step() {
  for (const auto& name : store_->names()) {
    if (!store_->grad(name).allFinite()) {
      throw NonFiniteError("adam: non-finite gradient in " + name);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& name : store_->names()) {
    const Eigen::MatrixXd& g = store_->grad(name);
    Moments& mo = moments_.at(name);
    mo.m = cfg_.beta1 * mo.m + (1.0 - cfg_.beta1) * g;
    mo.v = cfg_.beta2 * mo.v.array() + (1.0 - cfg_.beta2) * g.array().square();
    store_->value(name).array() -=
        cfg_.lr * (mo.m.array() / bc1) / ((mo.v.array() / bc2).sqrt() + cfg_.eps);
  }
}

double clip_global_norm(ParamStore& store, double max_norm) {
  const double norm = store.grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (const auto& name : store.names()) {
      store.grad(name) *= s;
    }
  }
  return norm;
}

}  // namespace balign::nn
