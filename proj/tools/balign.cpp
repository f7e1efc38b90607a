// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// CLI entry point. Every subcommand takes an optional config file plus
// repeated --set key=value overrides applied on top of it.

#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "balign/config.hpp"
#include "balign/harness.hpp"

namespace {

struct ModeArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, ModeArgs& args) {
  sub->add_option("--config", args.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  sub->add_option("--set", args.overrides, "override as key=value (repeatable)");
}

int dispatch(const ModeArgs& args, const std::function<int(const balign::Config&)>& run) {
  balign::Config cfg;
  if (!args.config_path.empty()) cfg.load_file(args.config_path);
  for (const std::string& kv : args.overrides) cfg.apply_override(kv);
  return run(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive mmWave initial-access beam alignment testbed"};
  app.require_subcommand(1);

  ModeArgs train_map_args, train_agent_args, eval_args, baselines_args, patterns_args;
  CLI::App* train_map = app.add_subcommand("train-map", "Train the slice-to-combiner map");
  add_common(train_map, train_map_args);
  CLI::App* train_agent = app.add_subcommand("train-agent", "Train the alignment agent");
  add_common(train_agent, train_agent_args);
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a trained agent over an SNR sweep");
  add_common(eval, eval_args);
  CLI::App* baselines = app.add_subcommand("baselines", "Evaluate classical baselines");
  add_common(baselines, baselines_args);
  CLI::App* patterns = app.add_subcommand("export-patterns", "Export codebook beam patterns");
  add_common(patterns, patterns_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_map->parsed()) return dispatch(train_map_args, balign::run_train_map);
    if (train_agent->parsed()) return dispatch(train_agent_args, balign::run_train_agent);
    if (eval->parsed()) return dispatch(eval_args, balign::run_eval);
    if (baselines->parsed()) return dispatch(baselines_args, balign::run_baselines);
    if (patterns->parsed()) return dispatch(patterns_args, balign::run_export_patterns);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
