// SPDX-License-Identifier: Apache-2.0
//
// balign: learned and classical initial-access beam alignment for mmWave arrays.

#include "balign/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace balign {

namespace {
// "BALIGNCK" as a little-endian u64.
constexpr uint64_t kMagic = 0x4b434e47494c4142ull;
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error(std::string("checkpoint: truncated reading ") + what);
  return v;
}
}  // namespace

const Eigen::MatrixXd* CheckpointData::find(const std::string& name) const {
  for (const auto& [n, m] : arrays) {
    if (n == name) return &m;
  }
  return nullptr;
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + tmp + "' for writing");
    write_pod(out, kMagic);
    write_pod(out, kVersion);
    write_pod(out, data.fingerprint);
    write_pod(out, data.update_counter);
    write_pod(out, data.adam_t);
    write_pod(out, static_cast<uint32_t>(data.arrays.size()));
    for (const auto& [name, m] : data.arrays) {
      write_pod(out, static_cast<uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_pod(out, static_cast<uint32_t>(m.rows()));
      write_pod(out, static_cast<uint32_t>(m.cols()));
      // Eigen's default column-major element order.
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("checkpoint: cannot rename '" + tmp + "' to '" + path + "'");
  }
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  if (read_pod<uint64_t>(in, "magic") != kMagic) {
    throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
  }
  const uint32_t version = read_pod<uint32_t>(in, "version");
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  CheckpointData data;
  data.fingerprint = read_pod<uint64_t>(in, "fingerprint");
  data.update_counter = read_pod<uint64_t>(in, "update counter");
  data.adam_t = read_pod<uint64_t>(in, "optimizer step count");
  const uint32_t count = read_pod<uint32_t>(in, "array count");
  data.arrays.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_pod<uint32_t>(in, "name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw std::runtime_error("checkpoint: truncated reading array name");
    const uint32_t rows = read_pod<uint32_t>(in, "rows");
    const uint32_t cols = read_pod<uint32_t>(in, "cols");
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw std::runtime_error("checkpoint: truncated reading array '" + name + "'");
    data.arrays.emplace_back(std::move(name), std::move(m));
  }
  return data;
}

}  // namespace balign
