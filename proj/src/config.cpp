// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "balign/rng.hpp"

namespace balign {

namespace {
std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      // environment
      {"n_rx", "32"},
      {"episode_steps", "5"},
      {"num_paths", "1"},
      {"snr_db", "20"},
      {"seed", "1"},
      // action space
      {"action_map", "direct"},  // direct | beamforming
      {"map_checkpoint", ""},
      // agent optimization
      {"updates", "5000"},
      {"batch_episodes", "128"},
      {"minibatch_episodes", "32"},
      {"epochs", "4"},
      {"workers", "2"},
      {"lr", "3e-4"},
      {"clip_ratio", "0.2"},
      {"value_coef", "0.5"},
      {"entropy_coef", "0.001"},
      {"gamma", "1"},
      {"max_grad_norm", "0.5"},
      {"log_std_init", "-0.6931471805599453"},
      {"best_window", "20"},
      {"checkpoint_every", "200"},
      {"resume", ""},
      // beam-map optimization
      {"map_hidden", "128,128"},
      {"map_batch_specs", "256"},
      {"map_psi_samples", "256"},
      {"map_epsilon", "1"},
      {"map_updates", "2000"},
      {"map_lr", "1e-3"},
      // evaluation
      {"agent_checkpoint", ""},
      {"eval_episodes", "10000"},
      {"snr_list", ""},    // empty -> single point at snr_db
      {"methods", ""},     // empty -> mode default
      {"n_rx_list", ""},   // empty -> single n_rx
      {"seed_list", ""},   // empty -> single seed
      {"omp_grid", "256"},
      {"omp_iterations", "0"},  // 0 -> num_paths
      // pattern export
      {"codebook_beams", "8"},
      {"codebook_span_deg", "90"},
      {"pattern_points", "1000"},
      // output
      {"out_dir", "out"},
  };
  return defaults;
}
}  // namespace

Config::Config() : values_(default_values()) {}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  it->second = value;
}

void Config::apply_override(const std::string& kv) {
  const size_t eq = kv.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("config: override must be key=value, got '" + kv + "'");
  }
  set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open '" + path + "'");
  }
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: " + path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return it->second;
}

int Config::int_of(const std::string& key) const {
  const std::string& v = str(key);
  size_t pos = 0;
  int out;
  try {
    out = std::stoi(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not an integer: '" + v + "'");
  }
  if (pos != v.size()) {
    throw std::invalid_argument("config: key '" + key + "' is not an integer: '" + v + "'");
  }
  return out;
}

uint64_t Config::u64_of(const std::string& key) const {
  const std::string& v = str(key);
  size_t pos = 0;
  unsigned long long out;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not an unsigned integer: '" + v +
                                "'");
  }
  if (pos != v.size()) {
    throw std::invalid_argument("config: key '" + key + "' is not an unsigned integer: '" + v +
                                "'");
  }
  return out;
}

double Config::double_of(const std::string& key) const {
  const std::string& v = str(key);
  size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not a number: '" + v + "'");
  }
  if (pos != v.size()) {
    throw std::invalid_argument("config: key '" + key + "' is not a number: '" + v + "'");
  }
  return out;
}

namespace {
std::vector<std::string> split_list(const std::string& key, const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      throw std::invalid_argument("config: key '" + key + "' has an empty list item: '" + v + "'");
    }
    parts.push_back(item);
  }
  return parts;
}

// Full-consume item parser: "2x" must fail, exactly like the scalar getters.
template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& v, const char* what,
                          Parse parse) {
  std::vector<T> out;
  for (const std::string& p : split_list(key, v)) {
    size_t pos = 0;
    T item;
    try {
      item = parse(p, &pos);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("config: key '" + key + "' has a non-" + what + " item '" + p +
                                  "': '" + v + "'");
    } catch (const std::out_of_range&) {
      throw std::invalid_argument("config: key '" + key + "' has a non-" + what + " item '" + p +
                                  "': '" + v + "'");
    }
    if (pos != p.size()) {
      throw std::invalid_argument("config: key '" + key + "' has a non-" + what + " item '" + p +
                                  "': '" + v + "'");
    }
    out.push_back(item);
  }
  return out;
}
}  // namespace

std::vector<int> Config::int_list(const std::string& key) const {
  return parse_list<int>(key, str(key), "integer",
                         [](const std::string& p, size_t* pos) { return std::stoi(p, pos); });
}

std::vector<uint64_t> Config::u64_list(const std::string& key) const {
  return parse_list<uint64_t>(key, str(key), "unsigned", [](const std::string& p, size_t* pos) {
    return static_cast<uint64_t>(std::stoull(p, pos));
  });
}

std::vector<double> Config::double_list(const std::string& key) const {
  return parse_list<double>(key, str(key), "numeric",
                            [](const std::string& p, size_t* pos) { return std::stod(p, pos); });
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

uint64_t fingerprint_string(const std::string& s) {
  return fnv1a(s.data(), s.size());
}

}  // namespace balign
