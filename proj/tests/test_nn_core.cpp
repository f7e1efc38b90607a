// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "balign/nn/adam.hpp"
#include "balign/nn/graph.hpp"
#include "balign/nn/layers.hpp"
#include "balign/nn/param_store.hpp"
#include "balign/rng.hpp"
#include "common/fd_check.hpp"
#include "doctest.h"

using namespace balign;
using nn::Graph;
using nn::ParamStore;
using nn::Var;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, RandomGen& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.gaussian();
  }
  return m;
}

}  // namespace

TEST_CASE("param store tracks named arrays in insertion order") {
  ParamStore store;
  store.create("w", 2, 3).setConstant(1.0);
  store.create("b", 1, 3).setConstant(2.0);
  store.create("a", 4, 1).setConstant(3.0);

  CHECK(store.size() == 3);
  CHECK(store.contains("w"));
  CHECK_FALSE(store.contains("nope"));
  REQUIRE(store.names().size() == 3);
  CHECK(store.names()[0] == "w");
  CHECK(store.names()[1] == "b");
  CHECK(store.names()[2] == "a");
  CHECK(store.total_parameters() == 2 * 3 + 1 * 3 + 4 * 1);

  CHECK_THROWS_AS(store.create("w", 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(store.value("missing"), std::out_of_range);
  CHECK_THROWS_AS(store.grad("missing"), std::out_of_range);
}

TEST_CASE("gradient buffers zero on demand and report their global norm") {
  ParamStore store;
  store.create("x", 2, 2);
  store.create("y", 1, 3);
  store.grad("x") << 3.0, 0.0, 0.0, 0.0;
  store.grad("y") << 0.0, 4.0, 0.0;

  CHECK(store.grad_norm() == doctest::Approx(5.0).epsilon(1e-12));

  store.zero_grads();
  CHECK(store.grad("x").cwiseAbs().maxCoeff() == 0.0);
  CHECK(store.grad("y").cwiseAbs().maxCoeff() == 0.0);
  CHECK(store.grad_norm() == 0.0);
}

TEST_CASE("elementwise and structural ops match direct evaluation") {
  RandomGen rng(11);
  const Eigen::MatrixXd a = random_matrix(3, 4, rng);
  const Eigen::MatrixXd b = random_matrix(3, 4, rng);
  const Eigen::MatrixXd c = random_matrix(4, 2, rng);
  Eigen::MatrixXd row = random_matrix(1, 4, rng);

  Graph g(false);
  const Var va = g.constant(a);
  const Var vb = g.constant(b);
  const Var vc = g.constant(c);
  const Var vrow = g.constant(row);
  const Var vs = g.scalar_constant(2.5);

  CHECK((g.value(g.add(va, vb)) - (a + b)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.value(g.sub(va, vb)) - (a - b)).cwiseAbs().maxCoeff() == 0.0);
  // .eval() materializes the reference products: otherwise compiler fma
  // contraction of value - a*b reports the product's own rounding residual.
  CHECK((g.value(g.mul(va, vb)) - a.cwiseProduct(b).eval()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.value(g.matmul(va, vc)) - a * c).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((g.value(g.neg(va)) + a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.value(g.scale(va, -1.5)) - (-1.5 * a).eval()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.value(g.add_const(va, 0.75)).array() - (a.array() + 0.75)).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd want = a;
  want.rowwise() += row.row(0);
  CHECK((g.value(g.add_rowvec(va, vrow)) - want).cwiseAbs().maxCoeff() == 0.0);
  want = a.array().rowwise() * row.row(0).array();
  CHECK((g.value(g.mul_rowvec(va, vrow)) - want).cwiseAbs().maxCoeff() == 0.0);

  CHECK((g.value(g.add_scalar(va, vs)).array() - (a.array() + 2.5)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.value(g.sub_scalar(va, vs)).array() - (a.array() - 2.5)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.value(g.mul_scalar(va, vs)) - (a * 2.5).eval()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.value(g.div_scalar(va, vs)) - (a / 2.5).eval()).cwiseAbs().maxCoeff() == 0.0);

  CHECK(g.scalar_value(g.sum(va)) == doctest::Approx(a.sum()).epsilon(1e-14));
  CHECK(g.scalar_value(g.mean(va)) == doctest::Approx(a.mean()).epsilon(1e-14));
  CHECK((g.value(g.row_sums(va)) - a.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((g.value(g.rows(va, 1, 2)) - a.middleRows(1, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.value(g.cols(va, 1, 3)) - a.middleCols(1, 3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.value(g.min(va, vb)) - a.cwiseMin(b)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(g.add(va, vc), std::invalid_argument);
  CHECK_THROWS_AS(g.matmul(va, vb), std::invalid_argument);
  CHECK_THROWS_AS(g.rows(va, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(g.cols(va, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(g.clamp(va, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("nonlinearities match their scalar definitions") {
  Eigen::MatrixXd x(1, 5);
  x << -2.0, -0.5, 0.0, 0.5, 2.0;
  Graph g(false);
  const Var vx = g.constant(x);
  for (int i = 0; i < 5; ++i) {
    const double v = x(0, i);
    CHECK(g.value(g.sigmoid(vx))(0, i) == doctest::Approx(1.0 / (1.0 + std::exp(-v))).epsilon(1e-15));
    CHECK(g.value(g.tanh(vx))(0, i) == doctest::Approx(std::tanh(v)).epsilon(1e-15));
    CHECK(g.value(g.exp(vx))(0, i) == doctest::Approx(std::exp(v)).epsilon(1e-15));
    CHECK(g.value(g.square(vx))(0, i) == doctest::Approx(v * v).epsilon(1e-15));
  }
  Eigen::MatrixXd pos(1, 3);
  pos << 0.25, 1.0, 4.0;
  const Var vp = g.constant(pos);
  for (int i = 0; i < 3; ++i) {
    CHECK(g.value(g.log(vp))(0, i) == doctest::Approx(std::log(pos(0, i))).epsilon(1e-15));
    CHECK(g.value(g.sqrt(vp))(0, i) == doctest::Approx(std::sqrt(pos(0, i))).epsilon(1e-15));
  }
  const Eigen::MatrixXd cl = g.value(g.clamp(vx, -1.0, 1.0));
  CHECK(cl(0, 0) == -1.0);
  CHECK(cl(0, 2) == 0.0);
  CHECK(cl(0, 4) == 1.0);
}

TEST_CASE("log of one minus squared tanh stays finite for large arguments") {
  Eigen::MatrixXd x(1, 4);
  x << -20.0, -1.3, 0.7, 20.0;
  Graph g(false);
  const Eigen::MatrixXd out = g.value(g.log1m_tanh_sq(g.constant(x)));

  // Large inputs underflow the naive form to log(0); the stable form must not.
  CHECK(std::isfinite(out(0, 0)));
  CHECK(std::isfinite(out(0, 3)));
  CHECK(out(0, 3) == doctest::Approx(2.0 * (std::log(2.0) - 20.0)).epsilon(1e-12));

  for (int i = 1; i <= 2; ++i) {
    const double t = std::tanh(x(0, i));
    CHECK(out(0, i) == doctest::Approx(std::log(1.0 - t * t)).epsilon(1e-12));
  }
}

TEST_CASE("binary op gradients are exact for add, mul and matmul") {
  RandomGen rng(21);
  ParamStore store;
  store.create("a", 2, 3) = random_matrix(2, 3, rng);
  store.create("b", 2, 3) = random_matrix(2, 3, rng);
  store.create("c", 3, 2) = random_matrix(3, 2, rng);

  // loss = sum(a*b) + sum(a c): d/da = b + (ones) c^T, d/db = a, d/dc = a^T ones.
  Graph g;
  const Var va = g.param(store, "a");
  const Var vb = g.param(store, "b");
  const Var vc = g.param(store, "c");
  const Var loss = g.add(g.sum(g.mul(va, vb)), g.sum(g.matmul(va, vc)));
  store.zero_grads();
  g.backward(loss);

  const Eigen::MatrixXd ones22 = Eigen::MatrixXd::Ones(2, 2);
  const Eigen::MatrixXd want_a = store.value("b") + ones22 * store.value("c").transpose();
  const Eigen::MatrixXd want_b = store.value("a");
  const Eigen::MatrixXd want_c = store.value("a").transpose() * ones22;
  CHECK((store.grad("a") - want_a).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((store.grad("b") - want_b).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((store.grad("c") - want_c).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("clamp blocks gradients at and beyond its bounds") {
  ParamStore store;
  Eigen::MatrixXd& x = store.create("x", 1, 5);
  x << -2.0, -1.0, 0.3, 1.0, 2.0;

  Graph g;
  const Var loss = g.sum(g.clamp(g.param(store, "x"), -1.0, 1.0));
  store.zero_grads();
  g.backward(loss);

  CHECK(store.grad("x")(0, 0) == 0.0);
  CHECK(store.grad("x")(0, 1) == 0.0);  // exactly at the bound: blocked
  CHECK(store.grad("x")(0, 2) == 1.0);
  CHECK(store.grad("x")(0, 3) == 0.0);
  CHECK(store.grad("x")(0, 4) == 0.0);
}

TEST_CASE("min routes tied gradients to the first operand") {
  ParamStore store;
  store.create("a", 1, 3) << 1.0, 5.0, 2.0;
  store.create("b", 1, 3) << 1.0, 3.0, 4.0;

  Graph g;
  const Var loss = g.sum(g.min(g.param(store, "a"), g.param(store, "b")));
  store.zero_grads();
  g.backward(loss);

  CHECK(store.grad("a")(0, 0) == 1.0);  // tie
  CHECK(store.grad("b")(0, 0) == 0.0);
  CHECK(store.grad("a")(0, 1) == 0.0);
  CHECK(store.grad("b")(0, 1) == 1.0);
  CHECK(store.grad("a")(0, 2) == 1.0);
  CHECK(store.grad("b")(0, 2) == 0.0);
}

TEST_CASE("slicing and reduction gradients land on the right coordinates") {
  ParamStore store;
  store.create("x", 3, 4).setRandom();

  Graph g;
  const Var vx = g.param(store, "x");
  // mean of a 2x2 interior block: each covered coord gets 1/4.
  const Var loss = g.mean(g.cols(g.rows(vx, 1, 2), 1, 2));
  store.zero_grads();
  g.backward(loss);

  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(3, 4);
  want.block(1, 1, 2, 2).setConstant(0.25);
  CHECK((store.grad("x") - want).cwiseAbs().maxCoeff() < 1e-15);

  Graph g2;
  const Var rs = g2.row_sums(g2.param(store, "x"));
  Eigen::MatrixXd wvec(3, 1);
  wvec << 1.0, 2.0, 3.0;
  const Var loss2 = g2.sum(g2.mul(rs, g2.constant(wvec)));
  store.zero_grads();
  g2.backward(loss2);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) CHECK(store.grad("x")(r, c) == doctest::Approx(wvec(r, 0)));
  }
}

TEST_CASE("repeated parameter lookups reuse one tape node") {
  ParamStore store;
  store.create("w", 2, 2).setConstant(1.0);
  Graph g;
  const Var a = g.param(store, "w");
  const Var b = g.param(store, "w");
  CHECK(a.id == b.id);

  // One node means the two uses accumulate into one gradient pass.
  const Var loss = g.sum(g.add(a, b));
  store.zero_grads();
  g.backward(loss);
  CHECK((store.grad("w").array() - 2.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward guards its preconditions") {
  ParamStore store;
  store.create("w", 1, 1).setConstant(2.0);

  {
    Graph g;
    const Var loss = g.sum(g.param(store, "w"));
    store.zero_grads();
    g.backward(loss);
    CHECK_THROWS_AS(g.backward(loss), std::logic_error);
  }
  {
    Graph g(false);
    const Var loss = g.sum(g.constant(Eigen::MatrixXd::Ones(1, 1)));
    CHECK_THROWS_AS(g.backward(loss), std::logic_error);
  }
  {
    Graph g;
    const Var x = g.add(g.param(store, "w"), g.constant(Eigen::MatrixXd::Ones(1, 1)));
    const Var wide = g.constant(Eigen::MatrixXd::Ones(2, 2));
    store.zero_grads();
    CHECK_THROWS_AS(g.backward(wide), std::invalid_argument);  // loss must be 1x1
    g.backward(g.sum(x));                                      // still usable afterwards
  }
}

TEST_CASE("a non-finite loss raises a dedicated error") {
  ParamStore store;
  store.create("w", 1, 1).setConstant(-1.0);
  Graph g;
  const Var loss = g.sum(g.log(g.param(store, "w")));  // log of a negative: NaN
  store.zero_grads();
  CHECK_THROWS_AS(g.backward(loss), nn::NonFiniteError);
}

TEST_CASE("affine layer computes x w + b with fan-in bounded init") {
  ParamStore store;
  RandomGen init = RandomGen::stream(5, stream::kParamInit, 0);
  nn::Linear lin(store, "lin", 7, 3, init);

  CHECK(store.contains("lin.w"));
  CHECK(store.contains("lin.b"));
  const Eigen::MatrixXd& w = store.value("lin.w");
  const Eigen::MatrixXd& b = store.value("lin.b");
  REQUIRE(w.rows() == 7);
  REQUIRE(w.cols() == 3);
  CHECK(b.cwiseAbs().maxCoeff() == 0.0);
  const double bound = 1.0 / std::sqrt(7.0);
  CHECK(w.cwiseAbs().maxCoeff() <= bound);
  CHECK(w.cwiseAbs().maxCoeff() > 0.0);

  RandomGen rng(3);
  const Eigen::MatrixXd x = random_matrix(4, 7, rng);
  Eigen::MatrixXd want = x * w;
  want.rowwise() += b.row(0);
  CHECK((lin.plain(x) - want).cwiseAbs().maxCoeff() < 1e-14);

  Graph g(false);
  CHECK((g.value(lin.forward(g, g.constant(x))) - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mlp graph forward agrees with its plain forward") {
  ParamStore store;
  RandomGen init = RandomGen::stream(5, stream::kParamInit, 1);
  nn::Mlp mlp(store, "mlp", {3, 8, 5, 2}, init);
  CHECK(mlp.in() == 3);
  CHECK(mlp.out() == 2);

  RandomGen rng(9);
  const Eigen::MatrixXd x = random_matrix(6, 3, rng);
  Graph g(false);
  const Eigen::MatrixXd via_graph = g.value(mlp.forward(g, g.constant(x)));
  CHECK((via_graph - mlp.plain(x)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("gru with zeroed parameters halves its state each step") {
  ParamStore store;
  RandomGen init = RandomGen::stream(5, stream::kParamInit, 2);
  nn::GruStack gru(store, "gru", 3, 4, 1, init);
  for (const std::string& name : store.names()) store.value(name).setZero();

  // All gates at sigmoid(0)=1/2 and candidate tanh(0)=0: h' = h/2.
  RandomGen rng(17);
  Eigen::MatrixXd h0 = random_matrix(2, 4, rng);
  Eigen::MatrixXd x = random_matrix(2, 3, rng);

  Graph g(false);
  std::vector<Var> state = {g.constant(h0)};
  state = gru.step(g, g.constant(x), state);
  REQUIRE(state.size() == 1);
  CHECK((g.value(state[0]) - 0.5 * h0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gru sequence unroll equals repeated single steps") {
  ParamStore store;
  RandomGen init = RandomGen::stream(5, stream::kParamInit, 3);
  nn::GruStack gru(store, "gru", 2, 4, 2, init);

  RandomGen rng(31);
  const int T = 5, B = 3;
  std::vector<Eigen::MatrixXd> xs;
  for (int t = 0; t < T; ++t) xs.push_back(random_matrix(B, 2, rng));

  Graph ga(false);
  std::vector<Var> xseq;
  for (const auto& x : xs) xseq.push_back(ga.constant(x));
  std::vector<Var> finals;
  const std::vector<Var> top = gru.forward(ga, xseq, {}, &finals);
  REQUIRE(top.size() == static_cast<size_t>(T));
  REQUIRE(finals.size() == 2);

  Graph gb(false);
  std::vector<Var> state = gru.initial_state(gb, B);
  for (int t = 0; t < T; ++t) {
    state = gru.step(gb, gb.constant(xs[t]), state);
    CHECK((gb.value(state.back()) - ga.value(top[t])).cwiseAbs().maxCoeff() < 1e-14);
  }
  for (int l = 0; l < 2; ++l) {
    CHECK((gb.value(state[l]) - ga.value(finals[l])).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("mlp gradients agree with central differences") {
  ParamStore store;
  RandomGen init = RandomGen::stream(5, stream::kParamInit, 4);
  nn::Mlp mlp(store, "mlp", {3, 8, 5, 2}, init);

  RandomGen data(41);
  const Eigen::MatrixXd x = random_matrix(6, 3, data);
  const Eigen::MatrixXd target = random_matrix(6, 2, data);

  const auto eval_loss = [&]() {
    Graph g(false);
    const Var out = mlp.forward(g, g.constant(x));
    return g.scalar_value(g.mean(g.square(g.sub(out, g.constant(target)))));
  };
  const auto run_backward = [&]() {
    Graph g;
    const Var out = mlp.forward(g, g.constant(x));
    const Var loss = g.mean(g.square(g.sub(out, g.constant(target))));
    store.zero_grads();
    g.backward(loss);
    return g.scalar_value(loss);
  };

  RandomGen pick = RandomGen::stream(5, stream::kOracle, 0);
  const auto report = testing::fd_check(store, run_backward, eval_loss, 50, 1e-5, pick);
  INFO("worst coordinate: ", report.worst_coord);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("gru gradients through five steps agree with central differences") {
  ParamStore store;
  RandomGen init = RandomGen::stream(5, stream::kParamInit, 5);
  nn::GruStack gru(store, "gru", 2, 6, 2, init);

  RandomGen data(43);
  const int T = 5, B = 4;
  std::vector<Eigen::MatrixXd> xs;
  for (int t = 0; t < T; ++t) xs.push_back(random_matrix(B, 2, data));
  const Eigen::MatrixXd target = random_matrix(B, 6, data);

  const auto build = [&](Graph& g) {
    std::vector<Var> xseq;
    for (const auto& x : xs) xseq.push_back(g.constant(x));
    const std::vector<Var> top = gru.forward(g, xseq, {});
    return g.mean(g.square(g.sub(top.back(), g.constant(target))));
  };
  const auto eval_loss = [&]() {
    Graph g(false);
    return g.scalar_value(build(g));
  };
  const auto run_backward = [&]() {
    Graph g;
    const Var loss = build(g);
    store.zero_grads();
    g.backward(loss);
    return g.scalar_value(loss);
  };

  RandomGen pick = RandomGen::stream(5, stream::kOracle, 1);
  const auto report = testing::fd_check(store, run_backward, eval_loss, 50, 1e-5, pick);
  INFO("worst coordinate: ", report.worst_coord);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("adam's first step moves each coordinate by about minus lr times sign") {
  ParamStore store;
  store.create("w", 1, 4) << 1.0, -2.0, 3.0, 0.5;
  const Eigen::MatrixXd before = store.value("w");
  store.grad("w") << 10.0, -5.0, 0.25, -0.125;

  nn::AdamConfig cfg;
  cfg.lr = 1e-3;
  nn::Adam adam(store, cfg);
  adam.step();
  CHECK(adam.t() == 1);

  // With bias correction the first update is lr * g / (|g| + eps') ~ lr * sign(g).
  for (int i = 0; i < 4; ++i) {
    const double moved = store.value("w")(0, i) - before(0, i);
    const double sign = store.grad("w")(0, i) > 0 ? 1.0 : -1.0;
    CHECK(moved == doctest::Approx(-cfg.lr * sign).epsilon(1e-6));
  }
}

TEST_CASE("adam rejects non-finite gradients without touching state") {
  ParamStore store;
  store.create("w", 1, 2) << 1.0, 2.0;
  const Eigen::MatrixXd before = store.value("w");
  store.grad("w") << 1.0, std::numeric_limits<double>::quiet_NaN();

  nn::Adam adam(store, {});
  CHECK_THROWS_AS(adam.step(), nn::NonFiniteError);
  CHECK(adam.t() == 0);
  CHECK((store.value("w") - before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(adam.m("w").cwiseAbs().maxCoeff() == 0.0);
  CHECK(adam.v("w").cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("global norm clipping rescales only when above the threshold") {
  ParamStore store;
  store.create("a", 1, 2);
  store.create("b", 1, 1);
  store.grad("a") << 3.0, 0.0;
  store.grad("b") << 4.0;

  const double pre = nn::clip_global_norm(store, 2.5);
  CHECK(pre == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(store.grad_norm() == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(store.grad("a")(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(store.grad("b")(0, 0) == doctest::Approx(2.0).epsilon(1e-12));

  const double pre2 = nn::clip_global_norm(store, 10.0);
  CHECK(pre2 == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(store.grad("a")(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
}
