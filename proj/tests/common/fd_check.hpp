// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Randomized finite-difference gradient validation. The caller provides two
// views of the same deterministic loss: one that runs the analytic backward
// pass and one that only evaluates the value. Central differences on randomly
// chosen parameter coordinates are compared against the analytic gradient.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "balign/nn/param_store.hpp"
#include "balign/rng.hpp"

namespace balign::testing {

struct FdReport {
  double max_rel_err = 0.0;
  int coords_checked = 0;
  std::string worst_coord;
};

// run_backward: zeroes grads, builds the loss graph, runs backward, returns
// the loss value. eval_loss: returns the loss value only. Both must see the
// store's current parameter values.
inline FdReport fd_check(nn::ParamStore& store, const std::function<double()>& run_backward,
                         const std::function<double()>& eval_loss, int coords, double step,
                         RandomGen& rng) {
  run_backward();

  struct Coord {
    std::string name;
    int r;
    int c;
  };
  std::vector<Coord> all;
  for (const std::string& name : store.names()) {
    const Eigen::MatrixXd& m = store.value(name);
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < m.cols(); ++c) all.push_back({name, r, c});
    }
  }

  FdReport report;
  const int n = static_cast<int>(all.size());
  for (int k = 0; k < coords; ++k) {
    const Coord& coord = all[static_cast<int>(rng.uniform() * n) % n];
    const double analytic = store.grad(coord.name)(coord.r, coord.c);

    double& p = store.value(coord.name)(coord.r, coord.c);
    const double saved = p;
    p = saved + step;
    const double up = eval_loss();
    p = saved - step;
    const double down = eval_loss();
    p = saved;

    const double fd = (up - down) / (2.0 * step);
    const double rel = std::abs(fd - analytic) / std::max(1e-8, std::abs(fd) + std::abs(analytic));
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_coord = coord.name + "(" + std::to_string(coord.r) + "," +
                           std::to_string(coord.c) + ")";
    }
    ++report.coords_checked;
  }
  return report;
}

}  // namespace balign::testing
