// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

namespace balign::nn {

// Named, shape-annotated 64-bit float parameter arrays with mirrored gradient
// buffers. Iteration follows insertion order so that reductions over the
// store are deterministic.
class ParamStore {
 public:
  // Creates a zero-initialized array; the name must be new.
  Eigen::MatrixXd& create(const std::string& name, int rows, int cols);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  Eigen::MatrixXd& value(const std::string& name);
  const Eigen::MatrixXd& value(const std::string& name) const;
  Eigen::MatrixXd& grad(const std::string& name);
  const Eigen::MatrixXd& grad(const std::string& name) const;

  const std::vector<std::string>& names() const { return order_; }
  size_t size() const { return order_.size(); }
  int64_t total_parameters() const;

  void zero_grads();

  // Global L2 norm over all gradient buffers, accumulated in insertion order.
  double grad_norm() const;

 private:
  struct Entry {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
  };
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;

  std::vector<std::string> order_;
  std::unordered_map<std::string, Entry> entries_;
};

}  // namespace balign::nn
