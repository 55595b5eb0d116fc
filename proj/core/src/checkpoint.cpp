// Copyright 2026 The slungpinn Authors
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

#include "slung/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "slung/errors.hpp"

namespace slung {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'L', 'P', 'K'};

template <typename T>
void put(std::ostream& out, T v) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size())) throw DataError("checkpoint: truncated file");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParameterStore& store) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Parameter& p = store[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t e : p.value.shape()) put<std::uint64_t>(out, e);
    for (double v : p.value.values()) put<double>(out, v);
  }
  if (!out) throw DataError("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot open " + path.string() + " for writing");
  write_checkpoint(out, store);
}

ParameterStore read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("checkpoint: bad magic");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = get<std::uint32_t>(in);
  ParameterStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw DataError("checkpoint: truncated name");
    const auto rank = get<std::uint32_t>(in);
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(get<std::uint64_t>(in));
    Tensor t(shape);
    for (double& v : t.values()) v = get<double>(in);
    store.add(name, std::move(t));
  }
  return store;
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

void restore_checkpoint(const std::filesystem::path& path, ParameterStore& store) {
  const ParameterStore loaded = load_checkpoint(path);
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store[i];
    const Parameter* src = loaded.find(p.name);
    if (src == nullptr) throw DataError("checkpoint: missing parameter '" + p.name + "'");
    if (!src->value.same_shape(p.value)) {
      throw DataError("checkpoint: parameter '" + p.name + "' has shape " +
                      src->value.shape_string() + ", model expects " + p.value.shape_string());
    }
    p.value = src->value;
  }
}

}  // namespace slung
