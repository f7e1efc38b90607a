// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/nn/graph.hpp"

#include <cmath>

namespace balign::nn {

namespace {

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("graph: ") + op + " shape mismatch");
  }
}

void check_scalar(const Eigen::MatrixXd& s, const char* op) {
  if (s.rows() != 1 || s.cols() != 1) {
    throw std::invalid_argument(std::string("graph: ") + op + " expects a 1x1 operand");
  }
}

}  // namespace

int Graph::push(Eigen::MatrixXd value, bool needs_grad, std::function<void(Graph&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
    throw std::out_of_range("graph: invalid Var");
  }
  return nodes_[v.id];
}

Eigen::MatrixXd& Graph::grad_buf(int id) {
  Node& n = nodes_[id];
  if (!n.grad_live) {
    n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
    n.grad_live = true;
  }
  return n.grad;
}

const Eigen::MatrixXd& Graph::value(Var v) const { return node(v).value; }

double Graph::scalar_value(Var v) const {
  const Eigen::MatrixXd& m = node(v).value;
  check_scalar(m, "scalar_value");
  return m(0, 0);
}

Var Graph::constant(Eigen::MatrixXd value) { return Var{push(std::move(value), false, nullptr)}; }

Var Graph::scalar_constant(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var Graph::param(ParamStore& store, const std::string& name) {
  const auto key = std::make_pair(static_cast<const ParamStore*>(&store), name);
  if (auto it = param_cache_.find(key); it != param_cache_.end()) {
    return Var{it->second};
  }
  Eigen::MatrixXd* gslot = &store.grad(name);
  const bool req = grad_enabled_;
  const int id = push(store.value(name), req, nullptr);
  if (req) {
    nodes_[id].back = [id, gslot](Graph& g) { *gslot += g.grad(id); };
  }
  param_cache_.emplace(key, id);
  return Var{id};
}

Var Graph::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  const bool req = grad_enabled_ && (needs_grad(a) || needs_grad(b));
  const int id = push(value(a) + value(b), req, nullptr);
  if (req) {
    const int ia = a.id, ib = b.id;
    nodes_[id].back = [id, ia, ib](Graph& g) {
      if (g.nodes_[ia].requires_grad) g.grad_buf(ia) += g.grad(id);
      if (g.nodes_[ib].requires_grad) g.grad_buf(ib) += g.grad(id);
    };
  }
  return Var{id};
}

Var Graph::sub(Var a, Var b) {
  check_same_shape(value(a), value(b), "sub");
  const bool req = grad_enabled_ && (needs_grad(a) || needs_grad(b));
  const int id = push(value(a) - value(b), req, nullptr);
  if (req) {
    const int ia = a.id, ib = b.id;
    nodes_[id].back = [id, ia, ib](Graph& g) {
      if (g.nodes_[ia].requires_grad) g.grad_buf(ia) += g.grad(id);
      if (g.nodes_[ib].requires_grad) g.grad_buf(ib) -= g.grad(id);
    };
  }
  return Var{id};
}

Var Graph::mul(Var a, Var b) {
  check_same_shape(value(a), value(b), "mul");
  const bool req = grad_enabled_ && (needs_grad(a) || needs_grad(b));
  const int id = push(value(a).cwiseProduct(value(b)), req, nullptr);
  if (req) {
    const int ia = a.id, ib = b.id;
    nodes_[id].back = [id, ia, ib](Graph& g) {
      if (g.nodes_[ia].requires_grad) g.grad_buf(ia) += g.grad(id).cwiseProduct(g.val(ib));
      if (g.nodes_[ib].requires_grad) g.grad_buf(ib) += g.grad(id).cwiseProduct(g.val(ia));
    };
  }
  return Var{id};
}

Var Graph::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) {
    throw std::invalid_argument("graph: matmul shape mismatch");
  }
  const bool req = grad_enabled_ && (needs_grad(a) || needs_grad(b));
  const int id = push(value(a) * value(b), req, nullptr);
  if (req) {
    const int ia = a.id, ib = b.id;
    nodes_[id].back = [id, ia, ib](Graph& g) {
      if (g.nodes_[ia].requires_grad) g.grad_buf(ia).noalias() += g.grad(id) * g.val(ib).transpose();
      if (g.nodes_[ib].requires_grad) g.grad_buf(ib).noalias() += g.val(ia).transpose() * g.grad(id);
    };
  }
  return Var{id};
}

Var Graph::neg(Var a) { return scale(a, -1.0); }

Var Graph::scale(Var a, double s) {
  const bool req = grad_enabled_ && needs_grad(a);
  const int id = push(value(a) * s, req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia, s](Graph& g) { g.grad_buf(ia) += s * g.grad(id); };
  }
  return Var{id};
}

Var Graph::add_const(Var a, double c) {
  const bool req = grad_enabled_ && needs_grad(a);
  const int id = push(value(a).array() + c, req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) { g.grad_buf(ia) += g.grad(id); };
  }
  return Var{id};
}

Var Graph::add_rowvec(Var m, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(m).cols()) {
    throw std::invalid_argument("graph: add_rowvec shape mismatch");
  }
  const bool req = grad_enabled_ && (needs_grad(m) || needs_grad(row));
  Eigen::MatrixXd out = value(m);
  out.rowwise() += value(row).row(0);
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int im = m.id, ir = row.id;
    nodes_[id].back = [id, im, ir](Graph& g) {
      if (g.nodes_[im].requires_grad) g.grad_buf(im) += g.grad(id);
      if (g.nodes_[ir].requires_grad) g.grad_buf(ir) += g.grad(id).colwise().sum();
    };
  }
  return Var{id};
}

Var Graph::mul_rowvec(Var m, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(m).cols()) {
    throw std::invalid_argument("graph: mul_rowvec shape mismatch");
  }
  const bool req = grad_enabled_ && (needs_grad(m) || needs_grad(row));
  Eigen::MatrixXd out = value(m).array().rowwise() * value(row).row(0).array();
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int im = m.id, ir = row.id;
    nodes_[id].back = [id, im, ir](Graph& g) {
      if (g.nodes_[im].requires_grad) {
        g.grad_buf(im).array() += g.grad(id).array().rowwise() * g.val(ir).row(0).array();
      }
      if (g.nodes_[ir].requires_grad) {
        g.grad_buf(ir) += g.grad(id).cwiseProduct(g.val(im)).colwise().sum();
      }
    };
  }
  return Var{id};
}

Var Graph::add_scalar(Var m, Var s) {
  check_scalar(value(s), "add_scalar");
  const bool req = grad_enabled_ && (needs_grad(m) || needs_grad(s));
  const int id = push(value(m).array() + value(s)(0, 0), req, nullptr);
  if (req) {
    const int im = m.id, is = s.id;
    nodes_[id].back = [id, im, is](Graph& g) {
      if (g.nodes_[im].requires_grad) g.grad_buf(im) += g.grad(id);
      if (g.nodes_[is].requires_grad) g.grad_buf(is)(0, 0) += g.grad(id).sum();
    };
  }
  return Var{id};
}

Var Graph::sub_scalar(Var m, Var s) {
  check_scalar(value(s), "sub_scalar");
  const bool req = grad_enabled_ && (needs_grad(m) || needs_grad(s));
  const int id = push(value(m).array() - value(s)(0, 0), req, nullptr);
  if (req) {
    const int im = m.id, is = s.id;
    nodes_[id].back = [id, im, is](Graph& g) {
      if (g.nodes_[im].requires_grad) g.grad_buf(im) += g.grad(id);
      if (g.nodes_[is].requires_grad) g.grad_buf(is)(0, 0) -= g.grad(id).sum();
    };
  }
  return Var{id};
}

Var Graph::mul_scalar(Var m, Var s) {
  check_scalar(value(s), "mul_scalar");
  const bool req = grad_enabled_ && (needs_grad(m) || needs_grad(s));
  const int id = push(value(m) * value(s)(0, 0), req, nullptr);
  if (req) {
    const int im = m.id, is = s.id;
    nodes_[id].back = [id, im, is](Graph& g) {
      const double sv = g.val(is)(0, 0);
      if (g.nodes_[im].requires_grad) g.grad_buf(im) += sv * g.grad(id);
      if (g.nodes_[is].requires_grad) {
        g.grad_buf(is)(0, 0) += g.grad(id).cwiseProduct(g.val(im)).sum();
      }
    };
  }
  return Var{id};
}

Var Graph::div_scalar(Var m, Var s) {
  check_scalar(value(s), "div_scalar");
  const double sv = value(s)(0, 0);
  if (sv == 0.0) {
    throw std::invalid_argument("graph: div_scalar by zero");
  }
  const bool req = grad_enabled_ && (needs_grad(m) || needs_grad(s));
  const int id = push(value(m) / sv, req, nullptr);
  if (req) {
    const int im = m.id, is = s.id;
    nodes_[id].back = [id, im, is](Graph& g) {
      const double d = g.val(is)(0, 0);
      if (g.nodes_[im].requires_grad) g.grad_buf(im) += g.grad(id) / d;
      if (g.nodes_[is].requires_grad) {
        g.grad_buf(is)(0, 0) -= g.grad(id).cwiseProduct(g.val(im)).sum() / (d * d);
      }
    };
  }
  return Var{id};
}

Var Graph::sigmoid(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) {
      const auto& y = g.val(id).array();
      g.grad_buf(ia).array() += g.grad(id).array() * y * (1.0 - y);
    };
  }
  return Var{id};
}

Var Graph::tanh(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out = value(a).unaryExpr([](double x) { return std::tanh(x); });
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) {
      const auto& y = g.val(id).array();
      g.grad_buf(ia).array() += g.grad(id).array() * (1.0 - y.square());
    };
  }
  return Var{id};
}

Var Graph::exp(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out = value(a).array().exp();
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) {
      g.grad_buf(ia).array() += g.grad(id).array() * g.val(id).array();
    };
  }
  return Var{id};
}

Var Graph::log(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out = value(a).array().log();
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) {
      g.grad_buf(ia).array() += g.grad(id).array() / g.val(ia).array();
    };
  }
  return Var{id};
}

Var Graph::sqrt(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out = value(a).array().sqrt();
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) {
      g.grad_buf(ia).array() += g.grad(id).array() * 0.5 / g.val(id).array();
    };
  }
  return Var{id};
}

Var Graph::square(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out = value(a).array().square();
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) {
      g.grad_buf(ia).array() += g.grad(id).array() * 2.0 * g.val(ia).array();
    };
  }
  return Var{id};
}

Var Graph::log1m_tanh_sq(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out = value(a).unaryExpr([](double x) {
    const double ax = std::abs(x);
    return 2.0 * (std::log(2.0) - ax - std::log1p(std::exp(-2.0 * ax)));
  });
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) {
      g.grad_buf(ia).array() +=
          g.grad(id).array() * (-2.0) * g.val(ia).array().unaryExpr([](double x) { return std::tanh(x); });
    };
  }
  return Var{id};
}

Var Graph::clamp(Var a, double lo, double hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("graph: clamp needs lo < hi");
  }
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out = value(a).array().max(lo).min(hi);
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia, lo, hi](Graph& g) {
      const auto& x = g.val(ia).array();
      // Pass-through only strictly inside the interval.
      g.grad_buf(ia).array() +=
          g.grad(id).array() * ((x > lo).cast<double>() * (x < hi).cast<double>());
    };
  }
  return Var{id};
}

Var Graph::min(Var a, Var b) {
  check_same_shape(value(a), value(b), "min");
  const bool req = grad_enabled_ && (needs_grad(a) || needs_grad(b));
  const int id = push(value(a).cwiseMin(value(b)), req, nullptr);
  if (req) {
    const int ia = a.id, ib = b.id;
    nodes_[id].back = [id, ia, ib](Graph& g) {
      // Ties route the gradient to the first operand.
      Eigen::ArrayXXd mask = (g.val(ia).array() <= g.val(ib).array()).cast<double>();
      if (g.nodes_[ia].requires_grad) g.grad_buf(ia).array() += g.grad(id).array() * mask;
      if (g.nodes_[ib].requires_grad) g.grad_buf(ib).array() += g.grad(id).array() * (1.0 - mask);
    };
  }
  return Var{id};
}

Var Graph::sum(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = value(a).sum();
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) { g.grad_buf(ia).array() += g.grad(id)(0, 0); };
  }
  return Var{id};
}

Var Graph::mean(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  const double n = static_cast<double>(value(a).size());
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = value(a).sum() / n;
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia, n](Graph& g) { g.grad_buf(ia).array() += g.grad(id)(0, 0) / n; };
  }
  return Var{id};
}

Var Graph::row_sums(Var a) {
  const bool req = grad_enabled_ && needs_grad(a);
  Eigen::MatrixXd out = value(a).rowwise().sum();
  const int id = push(std::move(out), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia](Graph& g) {
      g.grad_buf(ia).colwise() += Eigen::VectorXd(g.grad(id).col(0));
    };
  }
  return Var{id};
}

Var Graph::rows(Var a, int start, int count) {
  if (start < 0 || count < 1 || start + count > value(a).rows()) {
    throw std::invalid_argument("graph: rows slice out of range");
  }
  const bool req = grad_enabled_ && needs_grad(a);
  const int id = push(value(a).middleRows(start, count), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia, start, count](Graph& g) {
      g.grad_buf(ia).middleRows(start, count) += g.grad(id);
    };
  }
  return Var{id};
}

Var Graph::cols(Var a, int start, int count) {
  if (start < 0 || count < 1 || start + count > value(a).cols()) {
    throw std::invalid_argument("graph: cols slice out of range");
  }
  const bool req = grad_enabled_ && needs_grad(a);
  const int id = push(value(a).middleCols(start, count), req, nullptr);
  if (req) {
    const int ia = a.id;
    nodes_[id].back = [id, ia, start, count](Graph& g) {
      g.grad_buf(ia).middleCols(start, count) += g.grad(id);
    };
  }
  return Var{id};
}

void Graph::backward(Var loss) {
  if (!grad_enabled_) {
    throw std::logic_error("graph: backward on a gradient-disabled graph");
  }
  if (backward_done_) {
    throw std::logic_error("graph: backward already ran on this tape");
  }
  if (nodes_.empty()) {
    throw std::logic_error("graph: backward before any forward op");
  }
  const Node& ln = node(loss);
  check_scalar(ln.value, "backward");
  if (!std::isfinite(ln.value(0, 0))) {
    throw NonFiniteError("graph: loss is not finite");
  }
  backward_done_ = true;
  grad_buf(loss.id)(0, 0) += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.grad_live && n.back) {
      n.back(*this);
    }
  }
}

}  // namespace balign::nn
