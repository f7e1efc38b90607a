// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Experiment drivers behind the CLI subcommands. Every driver writes its
// resolved configuration next to its outputs, emits CSV rows with pinned
// formatting, and returns 0 only on complete success.

#pragma once

#include <memory>
#include <string>

#include "balign/beam_map.hpp"
#include "balign/checkpoint.hpp"
#include "balign/config.hpp"
#include "balign/policy.hpp"

namespace balign {

// Trains the slice-to-combiner map and writes map_curve.csv plus
// map_final.ckpt into out_dir.
int run_train_map(const Config& cfg);

// Trains the agent for every (n_rx, seed) combination of n_rx_list x
// seed_list (defaulting to the scalar keys). Writes train_curve.csv,
// train_stats.csv, train_summary.txt, and periodic/best/final checkpoints.
int run_train_agent(const Config& cfg);

// Evaluates the trained agent (method "drl") over the SNR sweep; writes
// eval.csv with paired per-episode channels across methods.
int run_eval(const Config& cfg);

// Same sweep machinery with classical methods; defaults to mrc_csi,mrc_omp.
// exhaustive needs map_checkpoint (its codebook comes from the trained map).
int run_baselines(const Config& cfg);

// Dense angular gain grid for each codebook beam of a trained map; writes
// patterns.csv.
int run_export_patterns(const Config& cfg);

// Checkpoint plumbing shared by the drivers and the test suites.
std::string map_arch_string(int n_rx, const std::vector<int>& hidden);
std::string agent_arch_string(ActionMapper::Kind kind, int n_rx, const PolicyArch& arch);

// Loads a map checkpoint into a freshly built module; the checkpoint is
// self-describing via its meta arrays.
std::unique_ptr<BeamModule> load_map_module(const std::string& path);

struct LoadedAgent {
  std::unique_ptr<PolicyNet> policy;
  ActionMapper::Kind kind = ActionMapper::Kind::kDirect;
  int n_rx = 0;
  uint64_t update_counter = 0;
  double best_metric = 0.0;
};
LoadedAgent load_agent(const std::string& path);

}  // namespace balign
