// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/nn/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace balign::nn {

Eigen::MatrixXd& ParamStore::create(const std::string& name, int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("ParamStore::create: bad shape for " + name);
  }
  auto [it, inserted] = entries_.try_emplace(name);
  if (!inserted) {
    throw std::invalid_argument("ParamStore::create: duplicate name " + name);
  }
  order_.push_back(name);
  it->second.value = Eigen::MatrixXd::Zero(rows, cols);
  it->second.grad = Eigen::MatrixXd::Zero(rows, cols);
  return it->second.value;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::out_of_range("ParamStore: unknown parameter " + name);
  }
  return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::out_of_range("ParamStore: unknown parameter " + name);
  }
  return it->second;
}

Eigen::MatrixXd& ParamStore::value(const std::string& name) { return entry(name).value; }
const Eigen::MatrixXd& ParamStore::value(const std::string& name) const { return entry(name).value; }
Eigen::MatrixXd& ParamStore::grad(const std::string& name) { return entry(name).grad; }
const Eigen::MatrixXd& ParamStore::grad(const std::string& name) const { return entry(name).grad; }

int64_t ParamStore::total_parameters() const {
  int64_t n = 0;
  for (const auto& name : order_) {
    n += entry(name).value.size();
  }
  return n;
}

void ParamStore::zero_grads() {
  for (const auto& name : order_) {
    entry(name).grad.setZero();
  }
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& name : order_) {
    sq += entry(name).grad.squaredNorm();
  }
  return std::sqrt(sq);
}

}  // namespace balign::nn
