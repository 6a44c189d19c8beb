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
#include <span>
#include <string>
#include <vector>

namespace vlad::harness {

/// A binary greyscale image (P5, maxval 255).
struct Pgm {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Pixels in [0, 1] map to round(255 v).
std::vector<std::uint8_t> encode_pgm(std::span<const float> pixels, std::size_t width, std::size_t height);
/// Throws FormatError for anything but P5 with maxval 255 and an exact payload.
Pgm decode_pgm(const std::vector<std::uint8_t>& bytes);
void write_pgm(const std::filesystem::path& path, std::span<const float> pixels, std::size_t width, std::size_t height);
Pgm read_pgm(const std::filesystem::path& path);

/// One evaluation row of the metrics report.
struct ReportRow {
  std::string run_id;
  double fid_proxy = 0;
  double clip_proxy = 0;
  double ocr_accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f_measure = 0;
};

inline constexpr const char* kReportHeader = "run_id,fid_proxy,clip_proxy,ocr_accuracy,precision,recall,f_measure";

/// Header plus one line per row; doubles use the shortest round-trip form.
std::string format_report(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report(const std::string& text);

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace vlad::harness
