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

#include "vlad/harness/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vlad/core/error.hpp"

namespace vlad::harness {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::uint8_t> encode_pgm(std::span<const float> pixels, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0 || pixels.size() != width * height) {
    throw DimensionError("pgm: " + std::to_string(pixels.size()) + " pixels for " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  const std::string head = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  for (float v : pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw DomainError("pgm: pixel outside [0, 1]");
    out.push_back(static_cast<std::uint8_t>(std::lround(255.0f * v)));
  }
  return out;
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string header_token(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  auto space = [](std::uint8_t c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; };
  while (pos < b.size()) {
    if (space(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < b.size() && !space(b[pos]) && b[pos] != '#') tok += static_cast<char>(b[pos++]);
  if (tok.empty()) throw FormatError("pgm: truncated header");
  return tok;
}

std::size_t header_number(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  const std::string tok = header_token(b, pos);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw FormatError("pgm: bad header field '" + tok + "'");
  return v;
}

}  // namespace

Pgm decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (header_token(bytes, pos) != "P5") throw FormatError("pgm: expected P5 magic");
  Pgm img;
  img.width = header_number(bytes, pos);
  img.height = header_number(bytes, pos);
  if (header_number(bytes, pos) != 255) throw FormatError("pgm: only maxval 255 is supported");
  if (img.width == 0 || img.height == 0) throw FormatError("pgm: empty image");
  if (pos >= bytes.size()) throw FormatError("pgm: missing pixel data");
  ++pos;  // single whitespace byte before the raster
  if (bytes.size() - pos != img.width * img.height) {
    throw FormatError("pgm: expected " + std::to_string(img.width * img.height) + " pixel bytes, found " +
                      std::to_string(bytes.size() - pos));
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

void write_pgm(const std::filesystem::path& path, std::span<const float> pixels, std::size_t width, std::size_t height) {
  write_bytes(path, encode_pgm(pixels, width, height));
}

Pgm read_pgm(const std::filesystem::path& path) { return decode_pgm(read_bytes(path)); }

std::string format_report(const std::vector<ReportRow>& rows) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : rows) {
    if (r.run_id.find_first_of(",\n\"") != std::string::npos) throw FormatError("report: run_id '" + r.run_id + "' needs quoting");
    out += r.run_id;
    for (double v : {r.fid_proxy, r.clip_proxy, r.ocr_accuracy, r.precision, r.recall, r.f_measure}) {
      out += ',' + format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<ReportRow> parse_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw FormatError("report: missing or wrong header");
  std::vector<ReportRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 7) throw FormatError("report line " + std::to_string(lineno) + ": expected 7 fields");
    ReportRow r;
    r.run_id = cells[0];
    double* fields[] = {&r.fid_proxy, &r.clip_proxy, &r.ocr_accuracy, &r.precision, &r.recall, &r.f_measure};
    for (std::size_t i = 0; i < 6; ++i) {
      const std::string& c = cells[i + 1];
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), *fields[i]);
      if (ec != std::errc() || ptr != c.data() + c.size()) {
        throw FormatError("report line " + std::to_string(lineno) + ": bad number '" + c + "'");
      }
    }
    rows.push_back(r);
  }
  return rows;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

}  // namespace vlad::harness
