// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Layer builders over Graph: affine layers, tanh MLPs, and a stacked GRU.
// A layer binds to named arrays in a ParamStore; constructing a layer either
// creates and initializes the arrays or attaches to existing ones (as after
// loading a checkpoint).

#pragma once

#include <string>
#include <vector>

#include "balign/nn/graph.hpp"
#include "balign/nn/param_store.hpp"
#include "balign/rng.hpp"

namespace balign::nn {

// Uniform init on [-1/sqrt(fan_in), +1/sqrt(fan_in)].
void init_uniform_fanin(Eigen::MatrixXd& m, int fan_in, RandomGen& rng);

class Linear {
 public:
  // Creates (or binds) prefix+".w" of shape (in, out) and prefix+".b" of
  // shape (1, out). Weights get fan-in init when the arrays are new; biases
  // start at zero.
  Linear(ParamStore& store, std::string prefix, int in, int out, RandomGen& init_rng);

  Var forward(Graph& g, Var x) const;
  Eigen::MatrixXd plain(const Eigen::MatrixXd& x) const;

  int in() const { return in_; }
  int out() const { return out_; }

 private:
  ParamStore* store_;
  std::string wname_, bname_;
  int in_, out_;
};

// Fully connected net: tanh on hidden layers, affine output.
class Mlp {
 public:
  // dims = {in, hidden..., out}; needs at least {in, out}.
  Mlp(ParamStore& store, const std::string& prefix, const std::vector<int>& dims, RandomGen& init_rng);

  Var forward(Graph& g, Var x) const;
  Eigen::MatrixXd plain(const Eigen::MatrixXd& x) const;

  int in() const { return layers_.front().in(); }
  int out() const { return layers_.back().out(); }

 private:
  std::vector<Linear> layers_;
};

// Stacked GRU. Gate layout per layer L (weights (in, hidden), recurrent
// (hidden, hidden), biases (1, hidden), biases zero at init):
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wc + (r . h) Uc + bc)     (reset gate applied to the state)
//   h' = (1 - z) . h + z . c
class GruStack {
 public:
  GruStack(ParamStore& store, std::string prefix, int input_dim, int hidden_dim, int num_layers,
           RandomGen& init_rng);

  int hidden_dim() const { return hidden_; }
  int num_layers() const { return layers_; }

  // Zero initial state, one Var of shape (batch, hidden) per layer.
  std::vector<Var> initial_state(Graph& g, int batch) const;

  // One time step; returns the new per-layer states. The stack output is the
  // last layer's state.
  std::vector<Var> step(Graph& g, Var x, const std::vector<Var>& h) const;

  // Unrolls a whole sequence; returns the top-layer output per step and, if
  // requested, the final per-layer states. An empty h0 means zeros.
  std::vector<Var> forward(Graph& g, const std::vector<Var>& x_seq, std::vector<Var> h0,
                           std::vector<Var>* final_state = nullptr) const;

 private:
  std::string name(int layer, const char* gate) const;

  ParamStore* store_;
  std::string prefix_;
  int input_, hidden_, layers_;
};

}  // namespace balign::nn
