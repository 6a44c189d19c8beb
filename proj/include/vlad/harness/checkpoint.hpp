// Copyright 2026 The vlad Authors.
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
#include <filesystem>
#include <optional>
#include <vector>

#include "vlad/core/adam.hpp"
#include "vlad/harness/model.hpp"

namespace vlad::harness {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::optional<AdamState<float>> optimizer;
};

/// Text manifest followed by a little-endian float32 blob.
///
///   VLADCKPT 1
///   config_hash <16 hex digits>
///   config <line count>
///   <format_config lines>
///   params <count>
///   param <name> <shape> <offset> <count> <trainable>
///   lora <target> <rank>            (one per adapted weight)
///   adam <step> | adam none
///   moment <first|second> <name> <offset> <count>
///   blob_bytes <n>
///   end
///
/// Offsets and counts are in floats. Entries are contiguous and in order.
std::vector<std::uint8_t> encode_checkpoint(const Model& model, const AdamState<float>* optimizer = nullptr);
/// Throws FormatError on a bad header, version mismatch, config hash
/// mismatch, truncated or oversized blob, non-contiguous entries, or a
/// parameter list that disagrees with the one the config implies.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void checkpoint_save(const std::filesystem::path& path, const Model& model,
                     const AdamState<float>* optimizer = nullptr);
Checkpoint checkpoint_load(const std::filesystem::path& path);

}  // namespace vlad::harness
