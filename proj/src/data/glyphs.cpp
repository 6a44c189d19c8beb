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

#include "vlad/data/glyphs.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "vlad/core/error.hpp"

namespace vlad::data {

namespace {

constexpr Bitmap parse_bitmap(const char (&rows)[26]) {
  Bitmap b{};
  for (std::size_t i = 0; i < 25; ++i) b[i] = rows[i] == '1' ? 1 : 0;
  return b;
}

}  // namespace

const std::array<Bitmap, align::kGlyphCount>& glyph_bitmaps() {
  static const std::array<Bitmap, align::kGlyphCount> glyphs = {
      parse_bitmap("0010000100111110010000100"),  // A
      parse_bitmap("1000101010001000101010001"),  // B
      parse_bitmap("1111110001100011000111111"),  // C
      parse_bitmap("1111100000111110000011111"),  // D
      parse_bitmap("1000001000001000001000001"),  // E
  };
  return glyphs;
}

int hamming(const Bitmap& a, const Bitmap& b) {
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

void validate(const SceneConfig& cfg) {
  double total = 0;
  for (double p : cfg.object_count_probs) {
    if (!(p >= 0)) throw ConfigError("object-count probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("object-count probabilities must sum to 1");
  if (!(cfg.invert_probability >= 0 && cfg.invert_probability <= 1)) {
    throw ConfigError("invert probability must lie in [0, 1]");
  }
}

SceneSpec sample_scene(Rng& rng, const SceneConfig& cfg) {
  constexpr int kMaxAttempts = 1000;
  const int span = align::kMaxOrigin + 1;
  while (true) {
    const double u = rng.uniform();
    int count = 3;
    if (u < cfg.object_count_probs[0]) {
      count = 1;
    } else if (u < cfg.object_count_probs[0] + cfg.object_count_probs[1]) {
      count = 2;
    }
    SceneSpec spec;
    spec.style = rng.uniform() < cfg.invert_probability ? align::Style::kInvert : align::Style::kPlain;
    int attempts = 0;
    while (static_cast<int>(spec.objects.size()) < count && attempts < kMaxAttempts) {
      ++attempts;
      align::GlyphObject o{static_cast<int>(rng.below(align::kGlyphCount)), static_cast<int>(rng.below(span)),
                           static_cast<int>(rng.below(span))};
      const bool clash = std::any_of(spec.objects.begin(), spec.objects.end(),
                                     [&](const align::GlyphObject& other) { return align::boxes_overlap(o, other); });
      if (!clash) spec.objects.push_back(o);
    }
    if (static_cast<int>(spec.objects.size()) == count) return align::canonical(std::move(spec));
  }
}

std::vector<SceneSpec> sample_scenes(const Rng& rng, std::size_t first, std::size_t count, const SceneConfig& cfg) {
  validate(cfg);
  std::vector<SceneSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng stream = rng.split(first + i);
    out.push_back(sample_scene(stream, cfg));
  }
  return out;
}

Canvas render_scene(const SceneSpec& spec) {
  align::validate(spec);
  Canvas c{};
  const auto& glyphs = glyph_bitmaps();
  for (const auto& o : spec.objects) {
    const Bitmap& g = glyphs[static_cast<std::size_t>(o.glyph)];
    for (int r = 0; r < align::kGlyphSize; ++r) {
      for (int k = 0; k < align::kGlyphSize; ++k) {
        if (g[static_cast<std::size_t>(r * align::kGlyphSize + k)]) {
          c[static_cast<std::size_t>((o.row + r) * align::kCanvasSide + o.col + k)] = 1.0F;
        }
      }
    }
  }
  if (spec.style == align::Style::kInvert) {
    for (float& v : c) v = 1.0F - v;
  }
  return c;
}

std::string scene_to_prompt(const SceneSpec& spec) { return align::emit_prompt(align::canonical(spec)); }

Record make_record(const SceneSpec& spec) {
  Record r;
  r.spec = spec;
  const Canvas c = render_scene(spec);
  for (std::size_t i = 0; i < kPixels; ++i) r.canvas[i] = c[i] > 0.5F ? 255 : 0;
  return r;
}

Canvas to_canvas(const Record& record) {
  Canvas c{};
  for (std::size_t i = 0; i < kPixels; ++i) c[i] = record.canvas[i] ? 1.0F : 0.0F;
  return c;
}

namespace {

template <typename Int>
void put_le(std::vector<std::uint8_t>& out, Int value) {
  for (std::size_t i = 0; i < sizeof(Int); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename Int>
Int get_le(const std::uint8_t* p) {
  Int v = 0;
  for (std::size_t i = 0; i < sizeof(Int); ++i) v |= static_cast<Int>(static_cast<Int>(p[i]) << (8 * i));
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const std::vector<Record>& records) {
  std::vector<std::uint8_t> out = {'V', 'G', 'L', 'Y'};
  put_le<std::uint32_t>(out, kDatasetVersion);
  put_le<std::uint64_t>(out, records.size());
  for (const Record& r : records) {
    if (!(make_record(r.spec) == r)) throw DomainError("dataset record canvas does not match its scene");
    out.push_back(r.spec.style == align::Style::kInvert ? 1 : 0);
    out.push_back(static_cast<std::uint8_t>(r.spec.objects.size()));
    for (const auto& o : r.spec.objects) {
      out.push_back(static_cast<std::uint8_t>(o.glyph));
      out.push_back(static_cast<std::uint8_t>(o.row));
      out.push_back(static_cast<std::uint8_t>(o.col));
    }
    out.insert(out.end(), r.canvas.begin(), r.canvas.end());
  }
  return out;
}

std::vector<Record> decode_dataset(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "VGLY")) {
    throw FormatError("dataset: bad magic (expected VGLY)");
  }
  if (bytes.size() < kDatasetHeaderBytes) throw FormatError("dataset: truncated header");
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kDatasetVersion) {
    throw FormatError("dataset: version " + std::to_string(version) + " but this reader handles " +
                      std::to_string(kDatasetVersion));
  }
  const auto count = get_le<std::uint64_t>(bytes.data() + 8);
  std::vector<Record> records;
  std::size_t pos = kDatasetHeaderBytes;
  auto need = [&](std::size_t n, std::uint64_t index) {
    if (bytes.size() - pos < n) throw FormatError("dataset: truncated at record " + std::to_string(index));
  };
  for (std::uint64_t i = 0; i < count; ++i) {
    need(2, i);
    Record r;
    const std::uint8_t style = bytes[pos], n = bytes[pos + 1];
    pos += 2;
    if (style > 1) throw FormatError("dataset: record " + std::to_string(i) + " has style byte " + std::to_string(style));
    r.spec.style = style ? align::Style::kInvert : align::Style::kPlain;
    need(3 * static_cast<std::size_t>(n) + kPixels, i);
    for (std::uint8_t k = 0; k < n; ++k, pos += 3) r.spec.objects.push_back({bytes[pos], bytes[pos + 1], bytes[pos + 2]});
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), kPixels, r.canvas.begin());
    pos += kPixels;
    try {
      if (!(make_record(r.spec) == r)) throw DomainError("canvas does not match the rendered scene");
    } catch (const DomainError& e) {
      throw FormatError("dataset: record " + std::to_string(i) + " violates invariants: " + e.what());
    }
    records.push_back(std::move(r));
  }
  if (pos != bytes.size()) throw FormatError("dataset: " + std::to_string(bytes.size() - pos) + " trailing bytes");
  return records;
}

void dataset_write(const std::filesystem::path& path, const std::vector<Record>& records) {
  const std::vector<std::uint8_t> bytes = encode_dataset(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<Record> dataset_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_dataset(bytes);
}

}  // namespace vlad::data
