// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/beam_map.hpp"

#include <cmath>
#include <stdexcept>

namespace balign {

namespace {
constexpr double kHalfPi = M_PI / 2.0;
constexpr double kSpecTol = 1e-9;

std::vector<int> mlp_dims(int n_rx, const std::vector<int>& hidden) {
  std::vector<int> dims;
  dims.push_back(2);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(2 * n_rx);
  return dims;
}

// Net input scaling shared by training and the runtime path.
Eigen::RowVector2d scale_inputs(double alpha, double beta) {
  return {alpha / kHalfPi, beta / kHalfPi};
}

}  // namespace

BeamSpec::BeamSpec(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
  if (!(std::abs(alpha) <= kHalfPi + kSpecTol)) {
    throw std::invalid_argument("BeamSpec: alpha outside [-pi/2, pi/2]");
  }
  if (!(beta > 0.0)) {
    throw std::invalid_argument("BeamSpec: beta must be positive");
  }
  if (beta > beta_max(alpha) + kSpecTol) {
    throw std::invalid_argument("BeamSpec: beta exceeds beta_max(alpha)");
  }
}

double BeamSpec::beta_max(double alpha) {
  return std::min(kHalfPi, std::abs(kHalfPi - std::abs(alpha)));
}

double PsiRegions::inside_measure() const {
  double m = 0.0;
  for (const Interval& iv : inside) m += iv.length();
  return m;
}

double PsiRegions::outside_measure() const {
  double m = 0.0;
  for (const Interval& iv : outside) m += iv.length();
  return m;
}

PsiRegions psi_intervals(const BeamSpec& spec) {
  const double lo = std::max(-M_PI, 2.0 * (spec.alpha - spec.beta));
  const double hi = std::min(M_PI, 2.0 * (spec.alpha + spec.beta));
  if (!(lo < hi)) {
    throw std::logic_error("psi_intervals: degenerate inside interval");
  }
  PsiRegions r;
  r.inside.push_back({lo, hi});
  if (lo > -M_PI) r.outside.push_back({-M_PI, lo});
  if (hi < M_PI) r.outside.push_back({hi, M_PI});
  return r;
}

BeamSpec sample_beam_spec(RandomGen& rng) {
  const double alpha = rng.uniform(-kHalfPi, kHalfPi);
  const double bmax = BeamSpec::beta_max(alpha);
  // 1 - U[0,1) lands in (0, 1], so beta lands in (0, beta_max].
  const double beta = bmax * (1.0 - rng.uniform());
  return BeamSpec(alpha, beta);
}

Combiner direct_map(const Eigen::VectorXd& a) {
  if (a.size() < 2 || a.size() % 2 != 0) {
    throw std::invalid_argument("direct_map: need an even-length vector");
  }
  const int n = static_cast<int>(a.size()) / 2;
  Eigen::VectorXcd w(n);
  for (int i = 0; i < n; ++i) {
    w(i) = std::complex<double>(a(i), a(n + i));
  }
  return Combiner::normalized(w);
}

BeamModule::BeamModule(int n_rx, std::vector<int> hidden, uint64_t init_seed)
    : n_rx_(n_rx), hidden_(std::move(hidden)),
      net_([&]() -> nn::Mlp {
        if (n_rx < 1) throw std::invalid_argument("BeamModule: n_rx must be >= 1");
        RandomGen rng = RandomGen::stream(init_seed, stream::kParamInit, 0);
        return nn::Mlp(store_, "beam", mlp_dims(n_rx, hidden_), rng);
      }()) {}

Combiner BeamModule::forward(const BeamSpec& spec) const {
  const double beta = std::max(spec.beta, kBetaFloor);
  const Eigen::MatrixXd out = net_.plain(scale_inputs(spec.alpha, beta));
  Eigen::VectorXcd w(n_rx_);
  for (int i = 0; i < n_rx_; ++i) {
    w(i) = std::complex<double>(out(0, i), out(0, n_rx_ + i));
  }
  return Combiner::normalized(w);
}

namespace {

double sample_interval_union(RandomGen& rng, const std::vector<Interval>& ivs, double total) {
  double pick = rng.uniform() * total;
  for (const Interval& iv : ivs) {
    if (pick <= iv.length() || &iv == &ivs.back()) {
      return iv.lo + std::min(pick, iv.length());
    }
    pick -= iv.length();
  }
  return ivs.back().hi;  // unreachable
}

}  // namespace

BeamBatch sample_beam_batch(RandomGen& rng, int batch_specs, int angles_per_region) {
  if (batch_specs < 1 || angles_per_region < 1) {
    throw std::invalid_argument("sample_beam_batch: bad batch shape");
  }
  BeamBatch batch;
  batch.reserve(batch_specs);
  for (int b = 0; b < batch_specs; ++b) {
    BeamBatchItem item{sample_beam_spec(rng), {}, {}};
    const PsiRegions regions = psi_intervals(item.spec);
    item.inside.resize(angles_per_region);
    const Interval& in = regions.inside.front();
    for (int k = 0; k < angles_per_region; ++k) {
      item.inside(k) = rng.uniform(in.lo, in.hi);
    }
    const double out_measure = regions.outside_measure();
    if (out_measure > 1e-12) {
      item.outside.resize(angles_per_region);
      for (int k = 0; k < angles_per_region; ++k) {
        item.outside(k) = sample_interval_union(rng, regions.outside, out_measure);
      }
    }
    batch.push_back(std::move(item));
  }
  return batch;
}

namespace {

// cos/sin response tables with the 1/sqrt(n) element scale folded in, so that
// for unnormalized net output (u, v):
//   Re(w^H a_psi) = u C + v S,  Im(w^H a_psi) = u S - v C   (rows 1 x K)
void psi_tables(const Eigen::VectorXd& psis, int n, Eigen::MatrixXd* c, Eigen::MatrixXd* s) {
  const int k = static_cast<int>(psis.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  c->resize(n, k);
  s->resize(n, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) {
      const double ang = psis(j) * static_cast<double>(i);
      (*c)(i, j) = scale * std::cos(ang);
      (*s)(i, j) = scale * std::sin(ang);
    }
  }
}

struct RegionStats {
  nn::Var mean;
  nn::Var var;
};

RegionStats region_gain_stats(nn::Graph& g, nn::Var u, nn::Var v, nn::Var norm,
                              const Eigen::VectorXd& psis, int n_rx) {
  Eigen::MatrixXd ct, st;
  psi_tables(psis, n_rx, &ct, &st);
  nn::Var c = g.constant(std::move(ct));
  nn::Var s = g.constant(std::move(st));
  nn::Var re = g.add(g.matmul(u, c), g.matmul(v, s));
  nn::Var im = g.sub(g.matmul(u, s), g.matmul(v, c));
  nn::Var gain = g.div_scalar(g.sqrt(g.add(g.square(re), g.square(im))), norm);
  nn::Var mean = g.mean(gain);
  nn::Var var = g.mean(g.square(g.sub_scalar(gain, mean)));
  return {mean, var};
}

}  // namespace

nn::Var beam_loss(nn::Graph& g, BeamModule& module, const BeamBatch& batch, double epsilon) {
  if (batch.empty()) {
    throw std::invalid_argument("beam_loss: empty batch");
  }
  const int b = static_cast<int>(batch.size());
  const int n = module.n_rx();

  Eigen::MatrixXd inputs(b, 2);
  for (int i = 0; i < b; ++i) {
    inputs.row(i) = scale_inputs(batch[i].spec.alpha, batch[i].spec.beta);
  }
  nn::Var out = module.net().forward(g, g.constant(std::move(inputs)));

  nn::Var total{};
  for (int i = 0; i < b; ++i) {
    nn::Var row = g.rows(out, i, 1);
    nn::Var u = g.cols(row, 0, n);
    nn::Var v = g.cols(row, n, n);
    nn::Var norm = g.sqrt(g.add(g.sum(g.square(u)), g.sum(g.square(v))));

    const RegionStats in = region_gain_stats(g, u, v, norm, batch[i].inside, n);
    nn::Var item = g.add(g.neg(in.mean), g.scale(in.var, epsilon));
    if (batch[i].outside.size() > 0) {
      const RegionStats outr = region_gain_stats(g, u, v, norm, batch[i].outside, n);
      item = g.add(item, g.add(outr.mean, outr.var));
    }
    total = total.valid() ? g.add(total, item) : item;
  }
  return g.scale(total, 1.0 / static_cast<double>(b));
}

void BeamTrainConfig::validate() const {
  if (batch_specs < 1) throw std::invalid_argument("BeamTrainConfig: batch_specs must be >= 1");
  if (angles_per_region < 1) {
    throw std::invalid_argument("BeamTrainConfig: angles_per_region must be >= 1");
  }
  if (!(epsilon >= 0.0)) throw std::invalid_argument("BeamTrainConfig: epsilon must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("BeamTrainConfig: lr must be positive");
  if (updates < 1) throw std::invalid_argument("BeamTrainConfig: updates must be >= 1");
}

std::vector<double> train_beam_module(BeamModule& module, const BeamTrainConfig& cfg,
                                      const std::function<void(int, double)>& on_update) {
  cfg.validate();
  nn::AdamConfig acfg;
  acfg.lr = cfg.lr;
  nn::Adam adam(module.params(), acfg);
  std::vector<double> curve;
  curve.reserve(cfg.updates);
  for (int u = 0; u < cfg.updates; ++u) {
    RandomGen rng = RandomGen::stream(cfg.seed, stream::kBeamBatch, static_cast<uint64_t>(u));
    const BeamBatch batch = sample_beam_batch(rng, cfg.batch_specs, cfg.angles_per_region);
    nn::Graph g;
    nn::Var loss = beam_loss(g, module, batch, cfg.epsilon);
    module.params().zero_grads();
    g.backward(loss);
    adam.step();
    curve.push_back(g.scalar_value(loss));
    if (on_update) on_update(u, curve.back());
  }
  return curve;
}

std::vector<BeamSpec> codebook_specs(int q, double sector_lo, double sector_hi) {
  if (q < 1) {
    throw std::invalid_argument("codebook_specs: need at least one beam");
  }
  if (!(sector_lo < sector_hi)) {
    throw std::invalid_argument("codebook_specs: empty sector");
  }
  const double width = (sector_hi - sector_lo) / static_cast<double>(q);
  const double half = width / 2.0;
  if (half < kBetaFloor - 1e-12) {
    throw std::invalid_argument("codebook_specs: slices narrower than the trained beta floor");
  }
  std::vector<BeamSpec> specs;
  specs.reserve(q);
  for (int i = 0; i < q; ++i) {
    specs.emplace_back(sector_lo + (static_cast<double>(i) + 0.5) * width, half);
  }
  return specs;
}

std::vector<Combiner> build_codebook(const BeamModule& module, int q, double sector_lo,
                                     double sector_hi) {
  std::vector<Combiner> beams;
  for (const BeamSpec& spec : codebook_specs(q, sector_lo, sector_hi)) {
    beams.push_back(module.forward(spec));
  }
  return beams;
}

}  // namespace balign
