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

#include "vlad/harness/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <iterator>
#include <sstream>

#include "vlad/core/error.hpp"
#include "vlad/guidance/lora.hpp"
#include "vlad/harness/io.hpp"

namespace vlad::harness {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

namespace {

constexpr const char* kMagic = "VLADCKPT";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string shape_token(const Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out;
}

[[noreturn]] void corrupt(const std::string& what) { throw FormatError("checkpoint: " + what); }

template <typename T>
T number(const std::string& text, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) corrupt(std::string("bad ") + what + " '" + text + "'");
  return v;
}

Shape parse_shape(const std::string& text) {
  Shape shape;
  std::size_t start = 0;
  while (true) {
    std::size_t x = text.find('x', start);
    shape.push_back(number<std::size_t>(text.substr(start, x - start), "shape"));
    if (x == std::string::npos) break;
    start = x + 1;
  }
  for (std::size_t e : shape) {
    if (e == 0) corrupt("zero extent in shape '" + text + "'");
  }
  return shape;
}

// Reads whitespace-separated manifest lines one at a time.
class Manifest {
 public:
  Manifest(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::vector<std::string> line() {
    std::size_t nl = pos_;
    while (nl < bytes_.size() && bytes_[nl] != '\n') ++nl;
    if (nl == bytes_.size()) corrupt("manifest ends before 'end'");
    std::string text(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), bytes_.begin() + static_cast<std::ptrdiff_t>(nl));
    pos_ = nl + 1;
    last_ = text;
    std::istringstream in(text);
    std::vector<std::string> words{std::istream_iterator<std::string>(in), {}};
    return words;
  }

  std::string raw_line() {
    line();
    return last_;
  }

  std::vector<std::string> expect(const std::string& key, std::size_t words) {
    auto w = line();
    if (w.empty() || w[0] != key || w.size() != words) corrupt("expected '" + key + "' line, got '" + last_ + "'");
    return w;
  }

  std::size_t position() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
  std::string last_;
};

struct Entry {
  std::size_t offset;
  std::size_t count;
};

Entry check_entry(const std::string& off, const std::string& cnt, std::size_t& cursor, std::size_t expected) {
  Entry e{number<std::size_t>(off, "offset"), number<std::size_t>(cnt, "count")};
  if (e.offset != cursor) corrupt("entry at offset " + off + " is not contiguous (expected " + std::to_string(cursor) + ")");
  if (e.count != expected) corrupt("entry count " + cnt + " disagrees with its shape");
  cursor += e.count;
  return e;
}

Tensor<float> read_blob(const std::uint8_t* blob, const Shape& shape, const Entry& e) {
  std::vector<float> values(e.count);
  std::memcpy(values.data(), blob + e.offset * sizeof(float), e.count * sizeof(float));
  return Tensor<float>(shape, std::move(values));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model, const AdamState<float>* optimizer) {
  const ParamSet<float>& p = model.params;
  std::ostringstream head;
  head << kMagic << ' ' << kCheckpointVersion << '\n';
  head << "config_hash " << hex64(config_hash(model.config)) << '\n';
  const std::string cfg_text = format_config(model.config);
  std::size_t cfg_lines = 0;
  for (char c : cfg_text) cfg_lines += c == '\n';
  head << "config " << cfg_lines << '\n' << cfg_text;

  std::vector<const Tensor<float>*> blob;
  std::size_t offset = 0;
  head << "params " << p.size() << '\n';
  for (std::size_t i = 0; i < p.size(); ++i) {
    head << "param " << p.name(i) << ' ' << shape_token(p.value(i).shape()) << ' ' << offset << ' '
         << p.value(i).size() << ' ' << (p.trainable(i) ? 1 : 0) << '\n';
    offset += p.value(i).size();
    blob.push_back(&p.value(i));
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::string& n = p.name(i);
    if (p.contains(lora_a_name(n))) head << "lora " << n << ' ' << p.get(lora_a_name(n)).cols() << '\n';
  }
  if (optimizer == nullptr) {
    head << "adam none\n";
  } else {
    head << "adam " << optimizer->step << '\n';
    std::vector<std::string> names;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p.trainable(i)) names.push_back(p.name(i));
    }
    const auto& first = optimizer->first_moment;
    const auto& second = optimizer->second_moment;
    if (!first.empty() && (first.size() != names.size() || second.size() != names.size())) {
      throw DimensionError("checkpoint: optimizer moments do not match the trainable parameters");
    }
    for (const char* kind : {"first", "second"}) {
      const auto& moments = std::strcmp(kind, "first") == 0 ? first : second;
      for (std::size_t j = 0; j < moments.size(); ++j) {
        head << "moment " << kind << ' ' << names[j] << ' ' << offset << ' ' << moments[j].size() << '\n';
        offset += moments[j].size();
        blob.push_back(&moments[j]);
      }
    }
  }
  head << "blob_bytes " << offset * sizeof(float) << '\n' << "end\n";

  const std::string text = head.str();
  std::vector<std::uint8_t> out(text.begin(), text.end());
  out.reserve(out.size() + offset * sizeof(float));
  for (const Tensor<float>* t : blob) {
    const auto* raw = reinterpret_cast<const std::uint8_t*>(t->values().data());
    out.insert(out.end(), raw, raw + t->size() * sizeof(float));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Manifest m(bytes);
  auto w = m.line();
  if (w.size() != 2 || w[0] != kMagic) corrupt("not a checkpoint (bad magic)");
  if (number<int>(w[1], "version") != kCheckpointVersion) {
    corrupt("version " + w[1] + " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::string hash = m.expect("config_hash", 2)[1];
  const auto cfg_lines = number<std::size_t>(m.expect("config", 2)[1], "config line count");
  std::string cfg_text;
  for (std::size_t i = 0; i < cfg_lines; ++i) cfg_text += m.raw_line() + '\n';
  RunConfig cfg;
  try {
    cfg = parse_config(cfg_text);
  } catch (const ConfigError& e) {
    corrupt(std::string("embedded config: ") + e.what());
  }
  if (hex64(config_hash(cfg)) != hash) corrupt("config hash mismatch");

  // The parameter list must be exactly the one this config builds.
  Model reference = init_model(cfg);
  const ParamSet<float>& ref = reference.params;
  const auto count = number<std::size_t>(m.expect("params", 2)[1], "parameter count");
  if (count != ref.size()) corrupt("holds " + std::to_string(count) + " parameters, config implies " + std::to_string(ref.size()));
  struct Pending {
    std::string name;
    Shape shape;
    Entry entry;
    bool trainable;
  };
  std::vector<Pending> params;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < count; ++i) {
    w = m.expect("param", 6);
    if (w[1] != ref.name(i)) corrupt("parameter " + std::to_string(i) + " is '" + w[1] + "', expected '" + ref.name(i) + "'");
    Shape shape = parse_shape(w[2]);
    if (shape != ref.value(i).shape()) corrupt("shape mismatch for " + w[1] + ": " + w[2]);
    Entry e = check_entry(w[3], w[4], cursor, shape_numel(shape));
    if (w[5] != "0" && w[5] != "1") corrupt("bad trainable flag for " + w[1]);
    params.push_back({w[1], shape, e, w[5] == "1"});
  }
  w = m.line();
  while (!w.empty() && w[0] == "lora") {
    if (w.size() != 3 || !ref.contains(lora_a_name(w[1])) ||
        number<std::size_t>(w[2], "rank") != ref.get(lora_a_name(w[1])).cols()) {
      corrupt("adapter entry disagrees with the config");
    }
    w = m.line();
  }
  if (w.size() != 2 || w[0] != "adam") corrupt("expected 'adam' line");
  std::optional<AdamState<float>> optimizer;
  std::vector<std::size_t> trainable;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].trainable) trainable.push_back(i);
  }
  std::vector<Entry> first, second;
  if (w[1] != "none") {
    optimizer.emplace();
    optimizer->config.learning_rate = cfg.learning_rate;
    optimizer->step = number<std::uint64_t>(w[1], "optimizer step");
  }
  w = m.line();
  while (optimizer && !w.empty() && w[0] == "moment") {
    if (w.size() != 5 || (w[1] != "first" && w[1] != "second")) corrupt("bad moment line");
    auto& list = w[1] == "first" ? first : second;
    if (w[1] == "first" && !second.empty()) corrupt("first moments must precede second moments");
    if (list.size() >= trainable.size()) corrupt("too many " + w[1] + " moments");
    const Pending& owner = params[trainable[list.size()]];
    if (w[2] != owner.name) corrupt("moment for '" + w[2] + "', expected '" + owner.name + "'");
    list.push_back(check_entry(w[3], w[4], cursor, shape_numel(owner.shape)));
    w = m.line();
  }
  if (first.size() != second.size() || (!first.empty() && first.size() != trainable.size())) {
    corrupt("optimizer moments are incomplete");
  }
  if (w.size() != 2 || w[0] != "blob_bytes") corrupt("expected 'blob_bytes' line");
  const auto blob_bytes = number<std::size_t>(w[1], "blob size");
  if (blob_bytes != cursor * sizeof(float)) corrupt("blob_bytes disagrees with the entries");
  if (m.line() != std::vector<std::string>{"end"}) corrupt("expected 'end' line");
  const std::size_t available = bytes.size() - m.position();
  if (available < blob_bytes) {
    corrupt("blob truncated: " + std::to_string(available) + " of " + std::to_string(blob_bytes) + " bytes");
  }
  if (available > blob_bytes) corrupt("trailing bytes after blob");

  const std::uint8_t* blob = bytes.data() + m.position();
  Checkpoint out{Model{cfg, {}, schedule_of(cfg)}, std::nullopt};
  for (const Pending& e : params) {
    Tensor<float> t = read_blob(blob, e.shape, e.entry);
    if (!t.all_finite()) corrupt("non-finite values in " + e.name);
    out.model.params.add(e.name, std::move(t), e.trainable);
  }
  if (optimizer) {
    for (std::size_t j = 0; j < first.size(); ++j) {
      const Shape& shape = params[trainable[j]].shape;
      optimizer->first_moment.push_back(read_blob(blob, shape, first[j]));
      optimizer->second_moment.push_back(read_blob(blob, shape, second[j]));
    }
    out.optimizer = std::move(optimizer);
  }
  return out;
}

void checkpoint_save(const std::filesystem::path& path, const Model& model, const AdamState<float>* optimizer) {
  write_bytes(path, encode_checkpoint(model, optimizer));
}

Checkpoint checkpoint_load(const std::filesystem::path& path) { return decode_checkpoint(read_bytes(path)); }

}  // namespace vlad::harness
