// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Binary checkpoint container: a fingerprint identifying the architecture the
// arrays belong to, training counters, and an ordered list of named
// double-precision arrays. Save/load round-trips are byte-exact, which is
// what makes "resume" and "evaluate" reproduce training-time numbers.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace balign {

struct CheckpointData {
  uint64_t fingerprint = 0;     // architecture/config compatibility stamp
  uint64_t update_counter = 0;  // optimizer updates completed so far
  uint64_t adam_t = 0;          // optimizer step count (bias correction)
  std::vector<std::pair<std::string, Eigen::MatrixXd>> arrays;

  const Eigen::MatrixXd* find(const std::string& name) const;
};

// Writes to a temporary file in the same directory, then renames into place,
// so a crash never leaves a truncated checkpoint behind.
void save_checkpoint(const std::string& path, const CheckpointData& data);

// Throws std::runtime_error on missing files, bad magic, unsupported version,
// or truncation.
CheckpointData load_checkpoint(const std::string& path);

}  // namespace balign
