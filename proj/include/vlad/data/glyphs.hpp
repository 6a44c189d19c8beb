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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "vlad/align/prompt.hpp"
#include "vlad/core/rng.hpp"

namespace vlad::data {

using SceneSpec = align::PromptSpec;
using Bitmap = std::array<std::uint8_t, 25>;

/// A PLUS, B CROSS, C SQUARE, D BARS, E DIAG; rows top to bottom, 1 = on.
const std::array<Bitmap, align::kGlyphCount>& glyph_bitmaps();
int hamming(const Bitmap& a, const Bitmap& b);

inline constexpr std::size_t kPixels = 256;
/// 16 x 16 row-major canvas with values in [0, 1].
using Canvas = std::array<float, kPixels>;

struct SceneConfig {
  /// Probabilities of 1, 2 and 3 objects.
  std::array<double, 3> object_count_probs{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double invert_probability = 0.5;
};

void validate(const SceneConfig& cfg);

/// Object count, style and placements drawn from rng; placements are uniform
/// over non-overlapping positions by rejection. Objects come back sorted by
/// (row, col).
SceneSpec sample_scene(Rng& rng, const SceneConfig& cfg);
/// Scene i is drawn from rng.split(i), so any subset can be regenerated
/// independently.
std::vector<SceneSpec> sample_scenes(const Rng& rng, std::size_t first, std::size_t count, const SceneConfig& cfg);

/// Stamps every glyph at its (row, col) and inverts for the invert style.
/// Throws DomainError for invalid specs, including overlapping boxes.
Canvas render_scene(const SceneSpec& spec);

/// Canonical prompt with objects sorted by (row, col).
std::string scene_to_prompt(const SceneSpec& spec);

struct Record {
  SceneSpec spec;
  std::array<std::uint8_t, kPixels> canvas{};  // 0 or 255
  friend bool operator==(const Record&, const Record&) = default;
};

Record make_record(const SceneSpec& spec);
Canvas to_canvas(const Record& record);

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 16;

/// "VGLY", version u32, count u64, then per record: style u8, object count
/// u8, (glyph, row, col) u8 triples, 256 canvas bytes. Little-endian.
std::vector<std::uint8_t> encode_dataset(const std::vector<Record>& records);
/// Throws FormatError on bad magic, version mismatch, truncation, trailing
/// bytes, or a record whose canvas differs from its rendered spec.
std::vector<Record> decode_dataset(const std::vector<std::uint8_t>& bytes);

void dataset_write(const std::filesystem::path& path, const std::vector<Record>& records);
std::vector<Record> dataset_read(const std::filesystem::path& path);

}  // namespace vlad::data
