// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "balign/baselines.hpp"
#include "balign/env.hpp"
#include "balign/ppo.hpp"

namespace balign {

namespace {

// Fixed agent trunk shape; only the action head width varies with the map.
constexpr int kGruLayers = 2;
constexpr int kFfLayers = 2;
constexpr int kWidth = 128;

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fmt_hex(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + dir + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

// Append-aware CSV sink; one flushed line per row so partial runs stay
// readable.
class CsvFile {
 public:
  CsvFile(const std::string& path, const std::string& header, bool append = false) {
    const bool fresh =
        !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, append ? (std::ios::out | std::ios::app) : (std::ios::out | std::ios::trunc));
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
    if (fresh) {
      out_ << header << '\n';
      out_.flush();
    }
  }

  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

EnvConfig env_from_config(const Config& cfg, int n_rx, uint64_t seed) {
  EnvConfig env;
  env.n_rx = n_rx;
  env.episode_steps = cfg.int_of("episode_steps");
  env.num_paths = cfg.int_of("num_paths");
  env.snr_db = cfg.double_of("snr_db");
  env.seed = seed;
  env.validate();
  return env;
}

PpoConfig ppo_from_config(const Config& cfg) {
  PpoConfig ppo;
  ppo.clip_ratio = cfg.double_of("clip_ratio");
  ppo.value_coef = cfg.double_of("value_coef");
  ppo.entropy_coef = cfg.double_of("entropy_coef");
  ppo.gamma = cfg.double_of("gamma");
  ppo.lr = cfg.double_of("lr");
  ppo.max_grad_norm = cfg.double_of("max_grad_norm");
  ppo.batch_episodes = cfg.int_of("batch_episodes");
  ppo.minibatch_episodes = cfg.int_of("minibatch_episodes");
  ppo.epochs = cfg.int_of("epochs");
  ppo.workers = cfg.int_of("workers");
  ppo.log_std_init = cfg.double_of("log_std_init");
  ppo.validate();
  return ppo;
}

ActionMapper::Kind kind_from_config(const Config& cfg) {
  const std::string& k = cfg.str("action_map");
  if (k == "direct") return ActionMapper::Kind::kDirect;
  if (k == "beamforming") return ActionMapper::Kind::kBeamforming;
  throw std::invalid_argument("config: action_map must be direct or beamforming, got '" + k + "'");
}

Eigen::MatrixXd scalar_mat(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

void pack_store(CheckpointData& data, const nn::ParamStore& store) {
  for (const std::string& name : store.names()) {
    data.arrays.emplace_back(name, store.value(name));
  }
}

void pack_adam(CheckpointData& data, const nn::ParamStore& store, const nn::Adam& adam) {
  for (const std::string& name : store.names()) {
    data.arrays.emplace_back("adam.m." + name, adam.m(name));
    data.arrays.emplace_back("adam.v." + name, adam.v(name));
  }
  data.adam_t = static_cast<uint64_t>(adam.t());
}

void restore_store(nn::ParamStore& store, const CheckpointData& data) {
  for (const std::string& name : store.names()) {
    const Eigen::MatrixXd* m = data.find(name);
    if (m == nullptr) throw std::runtime_error("checkpoint: missing array '" + name + "'");
    Eigen::MatrixXd& dst = store.value(name);
    if (m->rows() != dst.rows() || m->cols() != dst.cols()) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    dst = *m;
  }
}

void restore_adam(nn::Adam& adam, const nn::ParamStore& store, const CheckpointData& data) {
  for (const std::string& name : store.names()) {
    const Eigen::MatrixXd* m = data.find("adam.m." + name);
    const Eigen::MatrixXd* v = data.find("adam.v." + name);
    if (m == nullptr || v == nullptr) {
      throw std::runtime_error("checkpoint: missing optimizer state for '" + name + "'");
    }
    adam.m(name) = *m;
    adam.v(name) = *v;
  }
  adam.set_t(static_cast<int64_t>(data.adam_t));
}

double meta_scalar(const CheckpointData& data, const std::string& name) {
  const Eigen::MatrixXd* m = data.find(name);
  if (m == nullptr || m->size() != 1) {
    throw std::runtime_error("checkpoint: missing scalar '" + name + "'");
  }
  return (*m)(0, 0);
}

void save_map_checkpoint(const std::string& path, const BeamModule& module,
                         uint64_t update_counter) {
  CheckpointData data;
  data.fingerprint = fingerprint_string(map_arch_string(module.n_rx(), module.hidden()));
  data.update_counter = update_counter;
  Eigen::MatrixXd arch(1, 1 + module.hidden().size());
  arch(0, 0) = module.n_rx();
  for (size_t i = 0; i < module.hidden().size(); ++i) arch(0, 1 + i) = module.hidden()[i];
  data.arrays.emplace_back("meta.arch", arch);
  pack_store(data, module.params());
  save_checkpoint(path, data);
}

void save_agent_checkpoint(const std::string& path, const PolicyNet& policy,
                           const nn::Adam& adam, ActionMapper::Kind kind, int n_rx,
                           uint64_t update_counter, double best_metric) {
  CheckpointData data;
  data.fingerprint = fingerprint_string(agent_arch_string(kind, n_rx, policy.arch()));
  data.update_counter = update_counter;
  Eigen::MatrixXd arch(1, 6);
  arch << (kind == ActionMapper::Kind::kBeamforming ? 1.0 : 0.0), n_rx, policy.arch().gru_layers,
      policy.arch().ff_layers, policy.arch().width, policy.arch().action_dim;
  data.arrays.emplace_back("meta.arch", arch);
  data.arrays.emplace_back("meta.best_metric", scalar_mat(best_metric));
  pack_store(data, policy.params());
  pack_adam(data, policy.params(), adam);
  save_checkpoint(path, data);
}

std::vector<double> snr_points(const Config& cfg) {
  std::vector<double> snrs = cfg.double_list("snr_list");
  if (snrs.empty()) snrs.push_back(cfg.double_of("snr_db"));
  return snrs;
}

struct GainStats {
  double mean = 0.0;
  double ci95 = 0.0;
  int n = 0;
};

GainStats summarize(const std::vector<double>& gains) {
  GainStats s;
  s.n = static_cast<int>(gains.size());
  for (double g : gains) s.mean += g;
  s.mean /= s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double g : gains) ss += (g - s.mean) * (g - s.mean);
    s.ci95 = 1.96 * std::sqrt(ss / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

}  // namespace

std::string map_arch_string(int n_rx, const std::vector<int>& hidden) {
  std::ostringstream os;
  os << "map;n_rx=" << n_rx << ";hidden=";
  for (size_t i = 0; i < hidden.size(); ++i) {
    if (i) os << ',';
    os << hidden[i];
  }
  return os.str();
}

std::string agent_arch_string(ActionMapper::Kind kind, int n_rx, const PolicyArch& arch) {
  std::ostringstream os;
  os << "agent;action=" << ActionMapper::kind_name(kind) << ";n_rx=" << n_rx
     << ";obs=" << arch.obs_dim << ";gru=" << arch.gru_layers << "x" << arch.width
     << ";ff=" << arch.ff_layers << "x" << arch.width << ";na=" << arch.action_dim;
  return os.str();
}

std::unique_ptr<BeamModule> load_map_module(const std::string& path) {
  const CheckpointData data = load_checkpoint(path);
  const Eigen::MatrixXd* arch = data.find("meta.arch");
  if (arch == nullptr || arch->rows() != 1 || arch->cols() < 1) {
    throw std::runtime_error("checkpoint: '" + path + "' is not a map checkpoint");
  }
  const int n_rx = static_cast<int>((*arch)(0, 0));
  std::vector<int> hidden;
  for (int i = 1; i < arch->cols(); ++i) hidden.push_back(static_cast<int>((*arch)(0, i)));
  if (data.fingerprint != fingerprint_string(map_arch_string(n_rx, hidden))) {
    throw std::runtime_error("checkpoint: fingerprint mismatch in '" + path + "'");
  }
  auto module = std::make_unique<BeamModule>(n_rx, hidden, /*init_seed=*/0);
  restore_store(module->params(), data);
  return module;
}

LoadedAgent load_agent(const std::string& path) {
  const CheckpointData data = load_checkpoint(path);
  const Eigen::MatrixXd* arch_row = data.find("meta.arch");
  if (arch_row == nullptr || arch_row->rows() != 1 || arch_row->cols() != 6) {
    throw std::runtime_error("checkpoint: '" + path + "' is not an agent checkpoint");
  }
  LoadedAgent out;
  out.kind = (*arch_row)(0, 0) != 0.0 ? ActionMapper::Kind::kBeamforming
                                      : ActionMapper::Kind::kDirect;
  out.n_rx = static_cast<int>((*arch_row)(0, 1));
  PolicyArch arch;
  arch.obs_dim = 2;
  arch.gru_layers = static_cast<int>((*arch_row)(0, 2));
  arch.ff_layers = static_cast<int>((*arch_row)(0, 3));
  arch.width = static_cast<int>((*arch_row)(0, 4));
  arch.action_dim = static_cast<int>((*arch_row)(0, 5));
  if (data.fingerprint != fingerprint_string(agent_arch_string(out.kind, out.n_rx, arch))) {
    throw std::runtime_error("checkpoint: fingerprint mismatch in '" + path + "'");
  }
  out.policy = std::make_unique<PolicyNet>(arch, /*init_seed=*/0, /*log_std_init=*/0.0);
  restore_store(out.policy->params(), data);
  out.update_counter = data.update_counter;
  out.best_metric = meta_scalar(data, "meta.best_metric");
  return out;
}

int run_train_map(const Config& cfg) {
  const std::string out_dir = cfg.str("out_dir");
  ensure_dir(out_dir);
  write_text(join_path(out_dir, "config_resolved.txt"), cfg.canonical());

  const int n_rx = cfg.int_of("n_rx");
  const std::vector<int> hidden = cfg.int_list("map_hidden");
  BeamTrainConfig tc;
  tc.batch_specs = cfg.int_of("map_batch_specs");
  tc.angles_per_region = cfg.int_of("map_psi_samples");
  tc.epsilon = cfg.double_of("map_epsilon");
  tc.lr = cfg.double_of("map_lr");
  tc.updates = cfg.int_of("map_updates");
  tc.seed = cfg.u64_of("seed");
  tc.validate();

  BeamModule module(n_rx, hidden, tc.seed);
  CsvFile curve(join_path(out_dir, "map_curve.csv"), "update_index,loss");
  try {
    train_beam_module(module, tc, [&](int u, double loss) {
      curve.row({std::to_string(u), fmt_g(loss)});
      if ((u + 1) % 200 == 0 || u + 1 == tc.updates) {
        std::printf("[train-map] update %d/%d loss %.6f\n", u + 1, tc.updates, loss);
        std::fflush(stdout);
      }
    });
  } catch (const nn::NonFiniteError& e) {
    std::fprintf(stderr, "[train-map] aborted: %s\n", e.what());
    return 1;
  }
  save_map_checkpoint(join_path(out_dir, "map_final.ckpt"), module,
                      static_cast<uint64_t>(tc.updates));
  std::printf("[train-map] saved %s\n", join_path(out_dir, "map_final.ckpt").c_str());
  return 0;
}

namespace {

int run_one_agent_training(const Config& cfg, int n_rx, uint64_t seed,
                           const std::string& out_dir) {
  ensure_dir(out_dir);
  write_text(join_path(out_dir, "config_resolved.txt"),
             cfg.canonical() + "resolved_n_rx=" + std::to_string(n_rx) +
                 "\nresolved_seed=" + std::to_string(seed) + "\n");

  const EnvConfig env_cfg = env_from_config(cfg, n_rx, seed);
  const PpoConfig ppo = ppo_from_config(cfg);
  const ActionMapper::Kind kind = kind_from_config(cfg);

  std::unique_ptr<BeamModule> map_module;
  if (kind == ActionMapper::Kind::kBeamforming) {
    if (cfg.str("map_checkpoint").empty()) {
      throw std::invalid_argument("train-agent: beamforming mode requires map_checkpoint");
    }
    map_module = load_map_module(cfg.str("map_checkpoint"));
    if (map_module->n_rx() != n_rx) {
      throw std::invalid_argument("train-agent: map checkpoint antenna count mismatch");
    }
  }
  const ActionMapper mapper(kind, n_rx, map_module.get());

  PolicyArch arch;
  arch.obs_dim = 2;
  arch.gru_layers = kGruLayers;
  arch.ff_layers = kFfLayers;
  arch.width = kWidth;
  arch.action_dim = mapper.action_dim();
  PolicyNet policy(arch, seed, ppo.log_std_init);
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = ppo.lr;
  nn::Adam adam(policy.params(), adam_cfg);

  const int updates = cfg.int_of("updates");
  const int best_window = cfg.int_of("best_window");
  const int checkpoint_every = cfg.int_of("checkpoint_every");
  if (updates < 1 || best_window < 1 || checkpoint_every < 1) {
    throw std::invalid_argument("train-agent: updates, best_window, checkpoint_every must be >= 1");
  }

  uint64_t start_update = 0;
  double best_metric = -std::numeric_limits<double>::infinity();
  if (!cfg.str("resume").empty()) {
    const CheckpointData data = load_checkpoint(cfg.str("resume"));
    if (data.fingerprint != fingerprint_string(agent_arch_string(kind, n_rx, arch))) {
      throw std::runtime_error("train-agent: resume checkpoint does not match this config");
    }
    restore_store(policy.params(), data);
    restore_adam(adam, policy.params(), data);
    start_update = data.update_counter;
    best_metric = meta_scalar(data, "meta.best_metric");
    std::printf("[train-agent] resumed at update %llu\n",
                static_cast<unsigned long long>(start_update));
  }

  const bool append = start_update > 0;
  CsvFile curve(join_path(out_dir, "train_curve.csv"), "update_index,mean_reward", append);
  CsvFile stats_csv(join_path(out_dir, "train_stats.csv"),
                    "update_index,policy_loss,value_loss,entropy,grad_norm,ratio_dev_first",
                    append);

  std::deque<double> window;
  bool best_saved = false;
  const std::string best_path = join_path(out_dir, "agent_best.ckpt");
  const std::string last_path = join_path(out_dir, "agent_last.ckpt");

  try {
    for (uint64_t u = start_update; u < static_cast<uint64_t>(updates); ++u) {
      std::vector<EpisodeTrace> traces =
          collect_rollouts(env_cfg, policy, mapper, ppo.batch_episodes,
                           u * static_cast<uint64_t>(ppo.batch_episodes));
      compute_returns(traces, ppo.gamma);
      const UpdateStats st = ppo_update(policy, adam, traces, ppo, seed, u);

      curve.row({std::to_string(u), fmt_g(st.mean_reward)});
      stats_csv.row({std::to_string(u), fmt_g(st.policy_loss), fmt_g(st.value_loss),
                     fmt_g(st.entropy), fmt_g(st.grad_norm), fmt_g(st.ratio_dev_first)});

      window.push_back(st.mean_reward);
      if (static_cast<int>(window.size()) > best_window) window.pop_front();
      if (static_cast<int>(window.size()) == best_window) {
        double tm = 0.0;
        for (double r : window) tm += r;
        tm /= best_window;
        if (tm > best_metric) {
          best_metric = tm;
          save_agent_checkpoint(best_path, policy, adam, kind, n_rx, u + 1, best_metric);
          best_saved = true;
        }
      }
      if ((u + 1) % static_cast<uint64_t>(checkpoint_every) == 0) {
        save_agent_checkpoint(last_path, policy, adam, kind, n_rx, u + 1, best_metric);
      }
      if ((u + 1) % 100 == 0 || u + 1 == static_cast<uint64_t>(updates)) {
        std::printf("[train-agent] n_rx=%d seed=%llu update %llu/%d reward %.4f\n", n_rx,
                    static_cast<unsigned long long>(seed),
                    static_cast<unsigned long long>(u + 1), updates, st.mean_reward);
        std::fflush(stdout);
      }
    }
  } catch (const nn::NonFiniteError& e) {
    std::fprintf(stderr, "[train-agent] aborted (checkpoints on disk are intact): %s\n",
                 e.what());
    return 1;
  }

  double final_trailing = 0.0;
  if (!window.empty()) {
    for (double r : window) final_trailing += r;
    final_trailing /= static_cast<double>(window.size());
  }
  if (!best_saved && best_metric == -std::numeric_limits<double>::infinity()) {
    best_metric = final_trailing;
    save_agent_checkpoint(best_path, policy, adam, kind, n_rx,
                          static_cast<uint64_t>(updates), best_metric);
  }
  save_agent_checkpoint(join_path(out_dir, "agent_final.ckpt"), policy, adam, kind, n_rx,
                        static_cast<uint64_t>(updates), best_metric);
  write_text(join_path(out_dir, "train_summary.txt"),
             "updates=" + std::to_string(updates) + "\nfinal_trailing_mean=" +
                 fmt_g(final_trailing) + "\nbest_trailing_mean=" + fmt_g(best_metric) + "\n");
  return 0;
}

}  // namespace

int run_train_agent(const Config& cfg) {
  std::vector<int> n_rx_list = cfg.int_list("n_rx_list");
  if (n_rx_list.empty()) n_rx_list.push_back(cfg.int_of("n_rx"));
  std::vector<uint64_t> seed_list = cfg.u64_list("seed_list");
  if (seed_list.empty()) seed_list.push_back(cfg.u64_of("seed"));

  const std::string out_root = cfg.str("out_dir");
  const bool single = n_rx_list.size() == 1 && seed_list.size() == 1;
  for (int n_rx : n_rx_list) {
    for (uint64_t seed : seed_list) {
      std::string dir = out_root;
      if (!single) {
        dir = join_path(out_root,
                        "nrx" + std::to_string(n_rx) + "_seed" + std::to_string(seed));
      }
      const int rc = run_one_agent_training(cfg, n_rx, seed, dir);
      if (rc != 0) return rc;
    }
  }
  return 0;
}

namespace {

std::vector<std::string> method_list(const Config& cfg, const char* fallback) {
  std::vector<std::string> methods;
  std::stringstream ss(cfg.str("methods").empty() ? fallback : cfg.str("methods"));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) methods.push_back(item);
  }
  if (methods.empty()) throw std::invalid_argument("eval: empty method list");
  return methods;
}

int evaluate_sweep(const Config& cfg, const char* default_methods) {
  const std::string out_dir = cfg.str("out_dir");
  ensure_dir(out_dir);
  write_text(join_path(out_dir, "config_resolved.txt"), cfg.canonical());

  const std::vector<std::string> methods = method_list(cfg, default_methods);
  const std::vector<double> snrs = snr_points(cfg);
  const int episodes = cfg.int_of("eval_episodes");
  if (episodes < 1) throw std::invalid_argument("eval: eval_episodes must be >= 1");
  const uint64_t seed = cfg.u64_of("seed");
  const int n_rx = cfg.int_of("n_rx");

  auto has_method = [&](const char* m) {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
  };

  // Shared trained artifacts, loaded once.
  LoadedAgent agent;
  std::unique_ptr<BeamModule> map_module;
  auto ensure_map = [&]() -> BeamModule* {
    if (!map_module) {
      if (cfg.str("map_checkpoint").empty()) {
        throw std::invalid_argument("eval: this method set requires map_checkpoint");
      }
      map_module = load_map_module(cfg.str("map_checkpoint"));
      if (map_module->n_rx() != n_rx) {
        throw std::invalid_argument("eval: map checkpoint antenna count mismatch");
      }
    }
    return map_module.get();
  };

  if (has_method("drl")) {
    if (cfg.str("agent_checkpoint").empty()) {
      throw std::invalid_argument("eval: method drl requires agent_checkpoint");
    }
    agent = load_agent(cfg.str("agent_checkpoint"));
    if (agent.n_rx != n_rx) {
      throw std::invalid_argument("eval: agent checkpoint antenna count mismatch");
    }
    if (agent.kind == ActionMapper::Kind::kBeamforming) ensure_map();
  }

  std::unique_ptr<OmpEstimator> omp;
  if (has_method("mrc_omp")) {
    const int iterations =
        cfg.int_of("omp_iterations") > 0 ? cfg.int_of("omp_iterations") : cfg.int_of("num_paths");
    omp = std::make_unique<OmpEstimator>(n_rx, cfg.int_of("episode_steps") - 1,
                                         cfg.int_of("omp_grid"), iterations, seed);
  }

  std::vector<Combiner> codebook;
  if (has_method("exhaustive")) {
    codebook = build_codebook(*ensure_map(), cfg.int_of("episode_steps") - 1, -kAoaLimit,
                              kAoaLimit);
  }

  // The random floor shares the agent's action space when one is loaded.
  std::unique_ptr<ActionMapper> random_mapper;
  if (has_method("random")) {
    ActionMapper::Kind rk = kind_from_config(cfg);
    if (agent.policy) rk = agent.kind;
    random_mapper = std::make_unique<ActionMapper>(
        rk, n_rx, rk == ActionMapper::Kind::kBeamforming ? ensure_map() : nullptr);
  }

  CsvFile out(join_path(out_dir, "eval.csv"),
              "method,snr_db,episodes,mean_gain,mean_gain_db,ci95,channel_hash");

  for (const std::string& method : methods) {
    for (double snr : snrs) {
      Config point = cfg;
      point.set("snr_db", fmt_g(snr));
      const EnvConfig env_cfg = env_from_config(point, n_rx, seed);

      std::vector<double> gains;
      gains.reserve(episodes);
      uint64_t hash_chain = 0xcbf29ce484222325ull;

      if (method == "drl") {
        const ActionMapper mapper(agent.kind, n_rx,
                                  agent.kind == ActionMapper::Kind::kBeamforming
                                      ? ensure_map()
                                      : nullptr);
        int done = 0;
        while (done < episodes) {
          const int chunk = std::min(2000, episodes - done);
          const std::vector<EpisodeTrace> traces =
              collect_rollouts(env_cfg, *agent.policy, mapper, chunk,
                               static_cast<uint64_t>(done), /*eval_streams=*/true,
                               /*deterministic=*/true);
          for (const EpisodeTrace& tr : traces) gains.push_back(tr.terminal_reward());
          done += chunk;
        }
        // Pairing hash recomputed from the shared evaluation substream.
        for (int id = 0; id < episodes; ++id) {
          RandomGen ch_rng =
              RandomGen::stream(seed, stream::kEvalChannel, static_cast<uint64_t>(id));
          const Channel ch = sample_channel(ch_rng, env_cfg.num_paths, env_cfg.n_rx);
          hash_chain = hash_channel(ch, hash_chain);
        }
      } else {
        Environment env(env_cfg, /*eval_streams=*/true);
        for (int id = 0; id < episodes; ++id) {
          const uint64_t eid = static_cast<uint64_t>(id);
          double g = 0.0;
          if (method == "mrc_csi") {
            g = run_mrc_csi_episode(env, eid);
          } else if (method == "mrc_omp") {
            g = run_mrc_omp_episode(env, *omp, eid);
          } else if (method == "exhaustive") {
            g = run_exhaustive_episode(env, codebook, eid);
          } else if (method == "random") {
            RandomGen rng = RandomGen::stream(seed, stream::kAction, eid);
            g = run_random_episode(env, *random_mapper, eid, rng);
          } else {
            throw std::invalid_argument("eval: unknown method '" + method + "'");
          }
          gains.push_back(g);
          hash_chain = hash_channel(env.channel(), hash_chain);
        }
      }

      const GainStats s = summarize(gains);
      out.row({method, fmt_g(snr), std::to_string(s.n), fmt_g(s.mean),
               fmt_g(10.0 * std::log10(s.mean)), fmt_g(s.ci95), fmt_hex(hash_chain)});
      std::printf("[eval] %s snr %.1f dB: mean %.4f (ci95 %.4f, %d episodes)\n", method.c_str(),
                  snr, s.mean, s.ci95, s.n);
      std::fflush(stdout);
    }
  }
  return 0;
}

}  // namespace

int run_eval(const Config& cfg) { return evaluate_sweep(cfg, "drl"); }

int run_baselines(const Config& cfg) { return evaluate_sweep(cfg, "mrc_csi,mrc_omp"); }

int run_export_patterns(const Config& cfg) {
  const std::string out_dir = cfg.str("out_dir");
  ensure_dir(out_dir);
  write_text(join_path(out_dir, "config_resolved.txt"), cfg.canonical());

  if (cfg.str("map_checkpoint").empty()) {
    throw std::invalid_argument("export-patterns: map_checkpoint is required");
  }
  const std::unique_ptr<BeamModule> module = load_map_module(cfg.str("map_checkpoint"));
  const int beams = cfg.int_of("codebook_beams");
  const double span = cfg.double_of("codebook_span_deg") * M_PI / 180.0;
  const int points = cfg.int_of("pattern_points");
  if (points < 2) throw std::invalid_argument("export-patterns: pattern_points must be >= 2");

  const std::vector<Combiner> codebook = build_codebook(*module, beams, -span, span);

  CsvFile out(join_path(out_dir, "patterns.csv"), "beam_index,theta_deg,gain_linear");
  for (size_t b = 0; b < codebook.size(); ++b) {
    for (int p = 0; p < points; ++p) {
      const double theta = -M_PI / 2.0 + M_PI * static_cast<double>(p) / (points - 1);
      out.row({std::to_string(b), fmt_g(theta * 180.0 / M_PI),
               fmt_g(reference_gain(theta, codebook[b]))});
    }
  }
  std::printf("[export-patterns] wrote %zu beams x %d points\n", codebook.size(), points);
  return 0;
}

}  // namespace balign
