// Copyright 2026 The LucidPPN Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lucid/model.hpp"
#include "lucid/rng.hpp"

namespace lucid {

enum class CheckpointError { kIoFailure, kBadMagic, kBadVersion, kCorrupt };

class CheckpointFormatError : public std::runtime_error {
 public:
  CheckpointFormatError(CheckpointError code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  CheckpointError code() const { return code_; }

 private:
  CheckpointError code_;
};

/// On-disk model snapshot: every parameter tensor of both branches plus the
/// effective config (verbatim JSON), epoch and RNG digest.
struct Checkpoint {
  std::uint32_t epoch = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t rng_digest = 0;
  std::string config_json;
  std::vector<std::pair<std::string, std::vector<double>>> tensors;
};

namespace detail_ckpt {
inline constexpr char kMagic[4] = {'L', 'P', 'C', 'K'};
inline constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::istream& is, T& v, const std::string& path) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (is.gcount() != sizeof(T))
    throw CheckpointFormatError(CheckpointError::kCorrupt, "checkpoint truncated: " + path);
}
}  // namespace detail_ckpt

template <typename Scalar>
Checkpoint snapshot_model(LucidModel<Scalar>& model, std::string config_json, std::uint32_t epoch,
                          std::uint64_t rng_digest) {
  Checkpoint ckpt;
  ckpt.epoch = epoch;
  ckpt.rng_digest = rng_digest;
  ckpt.config_hash = fnv1a64(config_json);
  ckpt.config_json = std::move(config_json);
  for (const auto& view : model.parameters()) {
    std::vector<double> values(view.size);
    for (Eigen::Index i = 0; i < view.size; ++i) values[i] = static_cast<double>(view.value[i]);
    ckpt.tensors.emplace_back(view.name, std::move(values));
  }
  return ckpt;
}

template <typename Scalar>
void restore_model(LucidModel<Scalar>& model, const Checkpoint& ckpt) {
  auto views = model.parameters();
  if (views.size() != ckpt.tensors.size())
    throw CheckpointFormatError(CheckpointError::kCorrupt, "checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& [name, values] = ckpt.tensors[i];
    if (name != views[i].name || static_cast<Eigen::Index>(values.size()) != views[i].size)
      throw CheckpointFormatError(CheckpointError::kCorrupt,
                                  "checkpoint tensor mismatch at " + name + " vs " + views[i].name);
    for (Eigen::Index j = 0; j < views[i].size; ++j) views[i].value[j] = Scalar(values[j]);
  }
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointFormatError(CheckpointError::kIoFailure, "cannot write " + path);
  os.write(detail_ckpt::kMagic, 4);
  detail_ckpt::put(os, detail_ckpt::kVersion);
  detail_ckpt::put(os, ckpt.epoch);
  detail_ckpt::put(os, ckpt.config_hash);
  detail_ckpt::put(os, ckpt.rng_digest);
  detail_ckpt::put(os, static_cast<std::uint32_t>(ckpt.config_json.size()));
  os.write(ckpt.config_json.data(), static_cast<std::streamsize>(ckpt.config_json.size()));
  detail_ckpt::put(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, values] : ckpt.tensors) {
    detail_ckpt::put(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail_ckpt::put(os, static_cast<std::uint64_t>(values.size()));
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  if (!os) throw CheckpointFormatError(CheckpointError::kIoFailure, "write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointFormatError(CheckpointError::kIoFailure, "cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, detail_ckpt::kMagic, 4) != 0)
    throw CheckpointFormatError(CheckpointError::kBadMagic, "not a checkpoint: " + path);
  std::uint32_t version;
  detail_ckpt::get(is, version, path);
  if (version != detail_ckpt::kVersion)
    throw CheckpointFormatError(CheckpointError::kBadVersion, "unsupported checkpoint version in " + path);

  Checkpoint ckpt;
  detail_ckpt::get(is, ckpt.epoch, path);
  detail_ckpt::get(is, ckpt.config_hash, path);
  detail_ckpt::get(is, ckpt.rng_digest, path);
  std::uint32_t json_len;
  detail_ckpt::get(is, json_len, path);
  ckpt.config_json.resize(json_len);
  is.read(ckpt.config_json.data(), json_len);
  if (is.gcount() != static_cast<std::streamsize>(json_len))
    throw CheckpointFormatError(CheckpointError::kCorrupt, "checkpoint truncated: " + path);
  if (ckpt.config_hash != fnv1a64(ckpt.config_json))
    throw CheckpointFormatError(CheckpointError::kCorrupt, "config hash mismatch in " + path);

  std::uint32_t count;
  detail_ckpt::get(is, count, path);
  ckpt.tensors.resize(count);
  for (auto& [name, values] : ckpt.tensors) {
    std::uint32_t name_len;
    detail_ckpt::get(is, name_len, path);
    name.resize(name_len);
    is.read(name.data(), name_len);
    if (is.gcount() != static_cast<std::streamsize>(name_len))
      throw CheckpointFormatError(CheckpointError::kCorrupt, "checkpoint truncated: " + path);
    std::uint64_t value_count;
    detail_ckpt::get(is, value_count, path);
    values.resize(value_count);
    const auto bytes = static_cast<std::streamsize>(value_count * sizeof(double));
    is.read(reinterpret_cast<char*>(values.data()), bytes);
    if (is.gcount() != bytes)
      throw CheckpointFormatError(CheckpointError::kCorrupt, "checkpoint truncated: " + path);
  }
  char extra;
  if (is.read(&extra, 1); is.gcount() != 0)
    throw CheckpointFormatError(CheckpointError::kCorrupt, "trailing bytes in " + path);
  return ckpt;
}

}  // namespace lucid
