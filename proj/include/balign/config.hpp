// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.
//
// Flat key=value experiment configuration. Every key is registered with a
// default; unknown keys are hard errors so typos cannot silently fall back.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace balign {

class Config {
 public:
  Config();  // all keys at their defaults

  // Parses a file of `key = value` lines; '#' starts a comment, blank lines
  // are skipped. Throws on unknown keys or malformed lines.
  void load_file(const std::string& path);

  // Single assignment; throws on unknown key.
  void set(const std::string& key, const std::string& value);

  // Parses one "key=value" override (CLI form).
  void apply_override(const std::string& kv);

  const std::string& str(const std::string& key) const;
  int int_of(const std::string& key) const;
  uint64_t u64_of(const std::string& key) const;
  double double_of(const std::string& key) const;  // accepts inf / -inf

  // Comma-separated list forms; an empty value yields an empty vector.
  std::vector<int> int_list(const std::string& key) const;
  std::vector<uint64_t> u64_list(const std::string& key) const;
  std::vector<double> double_list(const std::string& key) const;

  // Sorted "key=value" lines; written next to results so every run records
  // the exact configuration that produced it.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

// FNV-1a of a canonical description string; used as the checkpoint
// compatibility fingerprint.
uint64_t fingerprint_string(const std::string& s);

}  // namespace balign
