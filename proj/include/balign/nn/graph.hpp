// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Reverse-mode autodiff on dense matrices. A Graph is a tape: every op
// records its value and, when gradients are enabled and an input requires
// them, a backward closure. backward() walks the tape once in reverse and
// accumulates parameter gradients into the owning ParamStore buffers.
//
// Values are row-major batches by convention: activations are (batch, width),
// weights are (in, out), biases are (1, out).

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "balign/nn/param_store.hpp"

namespace balign::nn {

struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

// Handle into a Graph's tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  size_t size() const { return nodes_.size(); }

  // Leaves.
  Var constant(Eigen::MatrixXd value);
  Var scalar_constant(double v);
  // Copies the current parameter value onto the tape; backward() adds the
  // node gradient into the store's matching grad buffer. Repeated calls for
  // the same array on one tape return the same node.
  Var param(ParamStore& store, const std::string& name);

  const Eigen::MatrixXd& value(Var v) const;
  double scalar_value(Var v) const;  // value of a 1x1 node

  // Elementwise and structural arithmetic.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // Hadamard
  Var matmul(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double s);
  Var add_const(Var a, double c);
  Var add_rowvec(Var m, Var row);  // (B,K) + (1,K)
  Var mul_rowvec(Var m, Var row);  // (B,K) * (1,K)
  Var add_scalar(Var m, Var s);    // s is 1x1
  Var sub_scalar(Var m, Var s);
  Var mul_scalar(Var m, Var s);
  Var div_scalar(Var m, Var s);

  // Nonlinearities.
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var square(Var a);
  // log(1 - tanh(x)^2), evaluated in a form stable for large |x|.
  Var log1m_tanh_sq(Var a);
  Var clamp(Var a, double lo, double hi);
  Var min(Var a, Var b);

  // Reductions and slicing.
  Var sum(Var a);       // (m,n) -> 1x1
  Var mean(Var a);      // (m,n) -> 1x1
  Var row_sums(Var a);  // (B,K) -> (B,1)
  Var rows(Var a, int start, int count);
  Var cols(Var a, int start, int count);

  // Reverse pass from a 1x1 loss node. May be called once per graph.
  void backward(Var loss);

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    std::function<void(Graph&)> back;
    bool requires_grad = false;
    bool grad_live = false;  // grad buffer allocated and seeded
  };

  int push(Eigen::MatrixXd value, bool needs_grad, std::function<void(Graph&)> back);
  const Node& node(Var v) const;
  bool needs_grad(Var v) const { return node(v).requires_grad; }
  // Gradient accumulation target for node `id`; allocates on first use.
  Eigen::MatrixXd& grad_buf(int id);
  const Eigen::MatrixXd& grad(int id) const { return nodes_[id].grad; }
  const Eigen::MatrixXd& val(int id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  std::map<std::pair<const ParamStore*, std::string>, int> param_cache_;
  bool grad_enabled_;
  bool backward_done_ = false;
};

}  // namespace balign::nn
