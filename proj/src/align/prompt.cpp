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

#include "vlad/align/prompt.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "vlad/core/error.hpp"

namespace vlad::align {

char glyph_letter(int glyph) {
  if (glyph < 0 || glyph >= kGlyphCount) throw DomainError("glyph id " + std::to_string(glyph) + " outside A..E");
  return static_cast<char>('A' + glyph);
}

std::string token_text(int id) {
  switch (id) {
    case tok::kPad: return "PAD";
    case tok::kBos: return "BOS";
    case tok::kEos: return "EOS";
    case tok::kScene: return "SCENE";
    case tok::kPlain: return "plain";
    case tok::kInvert: return "invert";
    case tok::kGlyph: return "GLYPH";
    case tok::kAt: return "AT";
    case tok::kSemi: return ";";
    default: break;
  }
  if (id >= tok::kGlyphBase && id < tok::kGlyphBase + kGlyphCount) return std::string(1, glyph_letter(id - tok::kGlyphBase));
  if (id >= tok::kCoordBase && id < tok::kVocabSize) return std::to_string(id - tok::kCoordBase);
  throw FormatError("unknown token id " + std::to_string(id));
}

namespace {

int word_id(const std::string& word) {
  static const std::pair<const char*, int> kWords[] = {
      {"SCENE", tok::kScene}, {"plain", tok::kPlain}, {"invert", tok::kInvert},
      {"GLYPH", tok::kGlyph}, {"AT", tok::kAt},       {";", tok::kSemi},
  };
  for (const auto& [text, id] : kWords) {
    if (word == text) return id;
  }
  if (word.size() == 1 && word[0] >= 'A' && word[0] < 'A' + kGlyphCount) return tok::kGlyphBase + (word[0] - 'A');
  if (!word.empty() && std::all_of(word.begin(), word.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
    if (ec != std::errc() || ptr != word.data() + word.size() || value > 15) {
      throw FormatError("coordinate " + word + " outside 0..15");
    }
    return tok::kCoordBase + value;
  }
  throw FormatError("unknown token '" + word + "'");
}

bool is_coord(int id) { return id >= tok::kCoordBase && id < tok::kVocabSize; }
bool is_glyph(int id) { return id >= tok::kGlyphBase && id < tok::kGlyphBase + kGlyphCount; }

// Checks the grammar on the body (between BOS and EOS).
void check_grammar(const TokenIds& body) {
  auto malformed = [](const std::string& why) { return FormatError("malformed prompt: " + why); };
  if (body.size() < 2 || body[0] != tok::kScene) throw malformed("expected 'SCENE <style>'");
  if (body[1] != tok::kPlain && body[1] != tok::kInvert) throw malformed("style must be plain or invert");
  std::size_t i = 2;
  std::size_t clauses = 0;
  while (i < body.size()) {
    if (body.size() - i < 6) throw malformed("truncated GLYPH clause");
    if (body[i] != tok::kSemi || body[i + 1] != tok::kGlyph || !is_glyph(body[i + 2]) || body[i + 3] != tok::kAt ||
        !is_coord(body[i + 4]) || !is_coord(body[i + 5])) {
      throw malformed("expected '; GLYPH <A-E> AT <row> <col>'");
    }
    i += 6;
    ++clauses;
  }
  if (clauses == 0) throw malformed("at least one GLYPH clause is required");
}

}  // namespace

TokenIds tokenize(const std::string& text) {
  std::istringstream in(text);
  TokenIds ids{tok::kBos};
  std::string word;
  while (in >> word) ids.push_back(word_id(word));
  if (ids.size() == 1) throw FormatError("malformed prompt: empty");
  check_grammar(TokenIds(ids.begin() + 1, ids.end()));
  ids.push_back(tok::kEos);
  return ids;
}

std::string detokenize(const TokenIds& ids) {
  std::string out;
  for (int id : ids) {
    if (id == tok::kBos || id == tok::kEos || id == tok::kPad) continue;
    if (!out.empty()) out += ' ';
    out += token_text(id);
  }
  return out;
}

std::vector<Clause> split_clauses(const TokenIds& ids) {
  if (ids.size() < 2 || ids.front() != tok::kBos || ids.back() != tok::kEos) {
    throw FormatError("malformed token sequence: missing BOS/EOS");
  }
  TokenIds body(ids.begin() + 1, ids.end() - 1);
  check_grammar(body);
  std::vector<Clause> clauses;
  clauses.push_back({tok::kScene, body[1], tok::kPad, tok::kPad, tok::kPad});
  for (std::size_t i = 2; i < body.size(); i += 6) {
    clauses.push_back({body[i + 1], body[i + 2], body[i + 3], body[i + 4], body[i + 5]});
  }
  return clauses;
}

bool boxes_overlap(const GlyphObject& a, const GlyphObject& b) {
  return std::abs(a.row - b.row) < kGlyphSize && std::abs(a.col - b.col) < kGlyphSize;
}

void validate(const PromptSpec& spec) {
  const auto n = spec.objects.size();
  if (n < 1 || n > static_cast<std::size_t>(kMaxObjects)) {
    throw DomainError("a scene holds 1..3 objects, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const GlyphObject& o = spec.objects[i];
    if (o.glyph < 0 || o.glyph >= kGlyphCount) throw DomainError("glyph id " + std::to_string(o.glyph) + " outside A..E");
    if (o.row < 0 || o.row > kMaxOrigin || o.col < 0 || o.col > kMaxOrigin) {
      throw DomainError("object position (" + std::to_string(o.row) + ", " + std::to_string(o.col) +
                        ") outside 0..11");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (boxes_overlap(o, spec.objects[j])) {
        throw DomainError("objects " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
      }
    }
  }
}

PromptSpec parse_tokens(const TokenIds& ids) {
  std::vector<Clause> clauses = split_clauses(ids);
  PromptSpec spec;
  spec.style = clauses[0][1] == tok::kInvert ? Style::kInvert : Style::kPlain;
  for (std::size_t i = 1; i < clauses.size(); ++i) {
    spec.objects.push_back({clauses[i][1] - tok::kGlyphBase, clauses[i][3] - tok::kCoordBase,
                            clauses[i][4] - tok::kCoordBase});
  }
  validate(spec);
  return spec;
}

PromptSpec parse_prompt(const std::string& text) { return parse_tokens(tokenize(text)); }

std::string emit_prompt(const PromptSpec& spec) {
  std::string out = spec.style == Style::kInvert ? "SCENE invert" : "SCENE plain";
  for (const GlyphObject& o : spec.objects) {
    out += " ; GLYPH ";
    out += glyph_letter(o.glyph);
    out += " AT " + std::to_string(o.row) + " " + std::to_string(o.col);
  }
  return out;
}

PromptSpec canonical(PromptSpec spec) {
  std::stable_sort(spec.objects.begin(), spec.objects.end(), [](const GlyphObject& a, const GlyphObject& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return spec;
}

}  // namespace vlad::align
