// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace balign::nn {

void init_uniform_fanin(Eigen::MatrixXd& m, int fan_in, RandomGen& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (int c = 0; c < m.cols(); ++c) {
    for (int r = 0; r < m.rows(); ++r) {
      m(r, c) = rng.uniform(-bound, bound);
    }
  }
}

namespace {

// Creates-or-binds one array; validates the shape when binding.
Eigen::MatrixXd& ensure_array(ParamStore& store, const std::string& name, int rows, int cols,
                              bool* created) {
  if (store.contains(name)) {
    Eigen::MatrixXd& m = store.value(name);
    if (m.rows() != rows || m.cols() != cols) {
      throw std::invalid_argument("layer: shape mismatch binding " + name);
    }
    *created = false;
    return m;
  }
  *created = true;
  return store.create(name, rows, cols);
}

}  // namespace

Linear::Linear(ParamStore& store, std::string prefix, int in, int out, RandomGen& init_rng)
    : store_(&store), wname_(prefix + ".w"), bname_(prefix + ".b"), in_(in), out_(out) {
  if (in < 1 || out < 1) {
    throw std::invalid_argument("Linear: bad dimensions for " + prefix);
  }
  bool created = false;
  Eigen::MatrixXd& w = ensure_array(store, wname_, in, out, &created);
  if (created) {
    init_uniform_fanin(w, in, init_rng);
  }
  ensure_array(store, bname_, 1, out, &created);
}

Var Linear::forward(Graph& g, Var x) const {
  Var w = g.param(*store_, wname_);
  Var b = g.param(*store_, bname_);
  return g.add_rowvec(g.matmul(x, w), b);
}

Eigen::MatrixXd Linear::plain(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = x * store_->value(wname_);
  out.rowwise() += store_->value(bname_).row(0);
  return out;
}

Mlp::Mlp(ParamStore& store, const std::string& prefix, const std::vector<int>& dims,
         RandomGen& init_rng) {
  if (dims.size() < 2) {
    throw std::invalid_argument("Mlp: need at least input and output dims");
  }
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    layers_.emplace_back(store, prefix + ".l" + std::to_string(i), dims[i], dims[i + 1], init_rng);
  }
}

Var Mlp::forward(Graph& g, Var x) const {
  Var h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(g, h);
    if (i + 1 < layers_.size()) {
      h = g.tanh(h);
    }
  }
  return h;
}

Eigen::MatrixXd Mlp::plain(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].plain(h);
    if (i + 1 < layers_.size()) {
      h = h.unaryExpr([](double v) { return std::tanh(v); });
    }
  }
  return h;
}

GruStack::GruStack(ParamStore& store, std::string prefix, int input_dim, int hidden_dim,
                   int num_layers, RandomGen& init_rng)
    : store_(&store), prefix_(std::move(prefix)), input_(input_dim), hidden_(hidden_dim),
      layers_(num_layers) {
  if (input_dim < 1 || hidden_dim < 1 || num_layers < 1) {
    throw std::invalid_argument("GruStack: bad dimensions for " + prefix_);
  }
  static const char* kGates[3] = {"z", "r", "c"};
  for (int l = 0; l < layers_; ++l) {
    const int in = (l == 0) ? input_ : hidden_;
    for (const char* gate : kGates) {
      bool created = false;
      Eigen::MatrixXd& w =
          ensure_array(store, name(l, ("w" + std::string(gate)).c_str()), in, hidden_, &created);
      if (created) init_uniform_fanin(w, in, init_rng);
      Eigen::MatrixXd& u =
          ensure_array(store, name(l, ("u" + std::string(gate)).c_str()), hidden_, hidden_, &created);
      if (created) init_uniform_fanin(u, hidden_, init_rng);
      ensure_array(store, name(l, ("b" + std::string(gate)).c_str()), 1, hidden_, &created);
    }
  }
}

std::string GruStack::name(int layer, const char* gate) const {
  return prefix_ + ".L" + std::to_string(layer) + "." + gate;
}

std::vector<Var> GruStack::initial_state(Graph& g, int batch) const {
  std::vector<Var> h;
  h.reserve(layers_);
  for (int l = 0; l < layers_; ++l) {
    h.push_back(g.constant(Eigen::MatrixXd::Zero(batch, hidden_)));
  }
  return h;
}

std::vector<Var> GruStack::step(Graph& g, Var x, const std::vector<Var>& h) const {
  if (static_cast<int>(h.size()) != layers_) {
    throw std::invalid_argument("GruStack::step: wrong state size");
  }
  std::vector<Var> out;
  out.reserve(layers_);
  Var in = x;
  for (int l = 0; l < layers_; ++l) {
    Var wz = g.param(*store_, name(l, "wz")), uz = g.param(*store_, name(l, "uz"));
    Var wr = g.param(*store_, name(l, "wr")), ur = g.param(*store_, name(l, "ur"));
    Var wc = g.param(*store_, name(l, "wc")), uc = g.param(*store_, name(l, "uc"));
    Var bz = g.param(*store_, name(l, "bz")), br = g.param(*store_, name(l, "br"));
    Var bc = g.param(*store_, name(l, "bc"));

    Var z = g.sigmoid(g.add_rowvec(g.add(g.matmul(in, wz), g.matmul(h[l], uz)), bz));
    Var r = g.sigmoid(g.add_rowvec(g.add(g.matmul(in, wr), g.matmul(h[l], ur)), br));
    Var c = g.tanh(g.add_rowvec(g.add(g.matmul(in, wc), g.matmul(g.mul(r, h[l]), uc)), bc));
    Var one_minus_z = g.add_const(g.neg(z), 1.0);
    Var hn = g.add(g.mul(one_minus_z, h[l]), g.mul(z, c));
    out.push_back(hn);
    in = hn;
  }
  return out;
}

std::vector<Var> GruStack::forward(Graph& g, const std::vector<Var>& x_seq, std::vector<Var> h0,
                                   std::vector<Var>* final_state) const {
  if (x_seq.empty()) {
    throw std::invalid_argument("GruStack::forward: empty sequence");
  }
  std::vector<Var> h = h0.empty()
                           ? initial_state(g, static_cast<int>(g.value(x_seq[0]).rows()))
                           : std::move(h0);
  std::vector<Var> top;
  top.reserve(x_seq.size());
  for (Var x : x_seq) {
    h = step(g, x, h);
    top.push_back(h.back());
  }
  if (final_state != nullptr) {
    *final_state = h;
  }
  return top;
}

}  // namespace balign::nn
