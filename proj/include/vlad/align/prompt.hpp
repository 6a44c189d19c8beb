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
#include <string>
#include <vector>

namespace vlad::align {

enum class Style { kPlain = 0, kInvert = 1 };

/// One glyph placed with its 5x5 box's top-left cell at (row, col).
struct GlyphObject {
  int glyph = 0;  // 0..4 for A..E
  int row = 0;
  int col = 0;
  friend bool operator==(const GlyphObject&, const GlyphObject&) = default;
};

/// Structured prompt: a global style plus 1..3 placed glyphs.
struct PromptSpec {
  Style style = Style::kPlain;
  std::vector<GlyphObject> objects;
  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;
};

inline constexpr int kMaxObjects = 3;
inline constexpr int kGlyphCount = 5;
inline constexpr int kGlyphSize = 5;
inline constexpr int kCanvasSide = 16;
inline constexpr int kMaxOrigin = kCanvasSide - kGlyphSize;  // 11

/// Frozen token table.
namespace tok {
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kScene = 3;
inline constexpr int kPlain = 4;
inline constexpr int kInvert = 5;
inline constexpr int kGlyph = 6;
inline constexpr int kAt = 7;
inline constexpr int kSemi = 8;
inline constexpr int kGlyphBase = 9;   // A..E = 9..13
inline constexpr int kCoordBase = 14;  // 0..15 = 14..29
inline constexpr int kVocabSize = 30;
}  // namespace tok

using TokenIds = std::vector<int>;
/// Five token ids per clause: [SCENE, style, PAD, PAD, PAD] or [GLYPH, g, AT, r, c].
using Clause = std::array<int, 5>;

/// Name of a token id ("SCENE", "A", "7", ...). Throws FormatError if unknown.
std::string token_text(int id);

/// BOS + words + EOS. Throws FormatError for unknown words, coordinates
/// outside 0..15, and sequences that do not follow the grammar.
TokenIds tokenize(const std::string& text);
/// Inverse of tokenize, joined with single spaces.
std::string detokenize(const TokenIds& ids);

/// Splits a well-formed id sequence into its global clause followed by one
/// clause per GLYPH entry.
std::vector<Clause> split_clauses(const TokenIds& ids);

/// Throws DomainError unless 1..3 objects lie in 0..11 with disjoint boxes.
void validate(const PromptSpec& spec);
bool boxes_overlap(const GlyphObject& a, const GlyphObject& b);

PromptSpec parse_tokens(const TokenIds& ids);
PromptSpec parse_prompt(const std::string& text);
/// Grammar string with objects in the given order.
std::string emit_prompt(const PromptSpec& spec);
/// Same spec with objects sorted by (row, col).
PromptSpec canonical(PromptSpec spec);

char glyph_letter(int glyph);

}  // namespace vlad::align
