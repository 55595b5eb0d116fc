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

// Parameter checkpoint container.
//
// Layout (all integers and doubles little-endian):
//   char[4]  magic "SLPK"
//   u32      format version (1)
//   u32      entry count
//   per entry:
//     u32    name length, then the name bytes (no terminator)
//     u32    rank, then rank x u64 extents
//     f64    product(extents) values, row-major

#ifndef SLUNG_CHECKPOINT_HPP_
#define SLUNG_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "slung/parameter.hpp"

namespace slung {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParameterStore& store);
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store);

// Reads a checkpoint into a fresh store; every entry comes back trainable.
ParameterStore read_checkpoint(std::istream& in);
ParameterStore load_checkpoint(const std::filesystem::path& path);

// Overwrites the values of `store` from a checkpoint file. Every parameter
// of the store must be present with a matching shape; throws DataError
// otherwise.
void restore_checkpoint(const std::filesystem::path& path, ParameterStore& store);

}  // namespace slung

#endif  // SLUNG_CHECKPOINT_HPP_
