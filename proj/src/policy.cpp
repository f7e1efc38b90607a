// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace balign {

namespace {
constexpr double kHalfPi = M_PI / 2.0;
// Largest |alpha| the squash can emit; keeps beta_max(alpha) >= kBetaFloor.
constexpr double kAlphaRange = kHalfPi - kBetaFloor;

double stable_log1m_tanh_sq(double x) {
  const double ax = std::abs(x);
  return 2.0 * (std::log(2.0) - ax - std::log1p(std::exp(-2.0 * ax)));
}
}  // namespace

ActionMapper::ActionMapper(Kind kind, int n_rx, const BeamModule* module)
    : kind_(kind), n_rx_(n_rx), module_(module) {
  if (n_rx < 1) {
    throw std::invalid_argument("ActionMapper: n_rx must be >= 1");
  }
  if (kind_ == Kind::kBeamforming) {
    if (module_ == nullptr) {
      throw std::invalid_argument("ActionMapper: beamforming mode needs a beam module");
    }
    if (module_->n_rx() != n_rx) {
      throw std::invalid_argument("ActionMapper: beam module antenna count mismatch");
    }
  }
}

int ActionMapper::action_dim() const {
  return kind_ == Kind::kDirect ? 2 * n_rx_ : 2;
}

const char* ActionMapper::kind_name(Kind k) {
  return k == Kind::kDirect ? "direct" : "beamforming";
}

Eigen::VectorXd ActionMapper::squash(const Eigen::VectorXd& u) const {
  if (u.size() != action_dim()) {
    throw std::invalid_argument("ActionMapper::squash: wrong action size");
  }
  if (kind_ == Kind::kDirect) {
    return u.unaryExpr([](double x) { return std::tanh(x); });
  }
  Eigen::VectorXd a(2);
  const double alpha = kAlphaRange * std::tanh(u(0));
  const double bhi = BeamSpec::beta_max(alpha);
  a(0) = alpha;
  a(1) = kBetaFloor + (bhi - kBetaFloor) * 0.5 * (std::tanh(u(1)) + 1.0);
  return a;
}

double ActionMapper::squash_log_jacobian(const Eigen::VectorXd& u) const {
  if (u.size() != action_dim()) {
    throw std::invalid_argument("ActionMapper::squash_log_jacobian: wrong action size");
  }
  if (kind_ == Kind::kDirect) {
    double lj = 0.0;
    for (int i = 0; i < u.size(); ++i) {
      lj += stable_log1m_tanh_sq(u(i));
    }
    return lj;
  }
  const double alpha = kAlphaRange * std::tanh(u(0));
  const double bhi = BeamSpec::beta_max(alpha);
  double lj = std::log(kAlphaRange) + stable_log1m_tanh_sq(u(0));
  lj += std::log((bhi - kBetaFloor) * 0.5) + stable_log1m_tanh_sq(u(1));
  return lj;
}

Combiner ActionMapper::to_combiner(const Eigen::VectorXd& squashed) const {
  if (kind_ == Kind::kDirect) {
    return direct_map(squashed);
  }
  if (squashed.size() != 2) {
    throw std::invalid_argument("ActionMapper::to_combiner: wrong action size");
  }
  return module_->forward(BeamSpec(squashed(0), squashed(1)));
}

void PolicyArch::validate() const {
  if (obs_dim < 1 || gru_layers < 1 || ff_layers < 0 || width < 1 || action_dim < 1) {
    throw std::invalid_argument("PolicyArch: bad dimensions");
  }
}

PolicyNet::PolicyNet(PolicyArch arch, uint64_t init_seed, double log_std_init)
    : arch_((arch.validate(), arch)),
      gru_([&]() -> nn::GruStack {
        RandomGen rng = RandomGen::stream(init_seed, stream::kParamInit, 1);
        return nn::GruStack(store_, "gru", arch_.obs_dim, arch_.width, arch_.gru_layers, rng);
      }()),
      ff_([&]() -> std::vector<nn::Linear> {
        RandomGen rng = RandomGen::stream(init_seed, stream::kParamInit, 2);
        std::vector<nn::Linear> layers;
        for (int i = 0; i < arch_.ff_layers; ++i) {
          layers.emplace_back(store_, "ff" + std::to_string(i), arch_.width, arch_.width, rng);
        }
        return layers;
      }()),
      head_mean_([&]() -> nn::Linear {
        RandomGen rng = RandomGen::stream(init_seed, stream::kParamInit, 3);
        return nn::Linear(store_, "head_mean", arch_.width, arch_.action_dim, rng);
      }()),
      head_value_([&]() -> nn::Linear {
        RandomGen rng = RandomGen::stream(init_seed, stream::kParamInit, 4);
        return nn::Linear(store_, "head_value", arch_.width, 1, rng);
      }()) {
  if (!store_.contains("log_std")) {
    store_.create("log_std", 1, arch_.action_dim).setConstant(log_std_init);
  }
}

std::vector<nn::Var> PolicyNet::initial_state(nn::Graph& g, int batch) const {
  return gru_.initial_state(g, batch);
}

PolicyNet::StepOut PolicyNet::forward_step(nn::Graph& g, nn::Var obs,
                                           const std::vector<nn::Var>& state) const {
  StepOut out;
  out.state = gru_.step(g, obs, state);
  nn::Var h = out.state.back();
  for (const nn::Linear& layer : ff_) {
    h = g.tanh(layer.forward(g, h));
  }
  out.mean = head_mean_.forward(g, h);
  out.value = head_value_.forward(g, h);
  return out;
}

nn::Var PolicyNet::log_std(nn::Graph& g) const {
  return g.clamp(g.param(const_cast<nn::ParamStore&>(store_), "log_std"), kLogStdLo, kLogStdHi);
}

nn::Var PolicyNet::gaussian_logp(nn::Graph& g, nn::Var u_const, nn::Var mean, nn::Var log_std) {
  const int n_a = static_cast<int>(g.value(mean).cols());
  nn::Var d = g.sub(u_const, mean);
  nn::Var inv_std = g.exp(g.neg(log_std));
  nn::Var q = g.row_sums(g.square(g.mul_rowvec(d, inv_std)));
  nn::Var lp = g.sub_scalar(g.scale(q, -0.5), g.sum(log_std));
  return g.add_const(lp, -0.5 * static_cast<double>(n_a) * std::log(2.0 * M_PI));
}

PolicyNet::ActResult PolicyNet::act(const ActionMapper& mapper,
                                    const std::vector<Eigen::MatrixXd>& state,
                                    const Observation& obs, RandomGen& action_rng,
                                    bool deterministic) const {
  if (mapper.action_dim() != arch_.action_dim) {
    throw std::invalid_argument("PolicyNet::act: mapper/arch action size mismatch");
  }
  nn::Graph g(false);
  std::vector<nn::Var> svars;
  if (state.empty()) {
    svars = initial_state(g, 1);
  } else {
    for (const Eigen::MatrixXd& s : state) {
      svars.push_back(g.constant(s));
    }
  }
  Eigen::MatrixXd o(1, 2);
  o << obs.re, obs.im;
  const StepOut so = forward_step(g, g.constant(std::move(o)), svars);
  nn::Var lstd = log_std(g);

  const Eigen::VectorXd mean = g.value(so.mean).row(0);
  const Eigen::VectorXd sigma = g.value(lstd).row(0).array().exp();

  ActResult res;
  res.u.resize(arch_.action_dim);
  for (int i = 0; i < arch_.action_dim; ++i) {
    res.u(i) = deterministic ? mean(i) : mean(i) + sigma(i) * action_rng.gaussian();
  }
  nn::Var lp = gaussian_logp(g, g.constant(Eigen::MatrixXd(res.u.transpose())), so.mean, lstd);
  res.log_jac = mapper.squash_log_jacobian(res.u);
  res.logp = g.scalar_value(lp) - res.log_jac;
  res.a = mapper.squash(res.u);
  res.value = g.value(so.value)(0, 0);
  res.state.reserve(so.state.size());
  for (nn::Var s : so.state) {
    res.state.push_back(g.value(s));
  }
  res.w = mapper.to_combiner(res.a).w();
  return res;
}

}  // namespace balign
