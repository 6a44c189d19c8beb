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

#include "vlad/harness/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "vlad/core/error.hpp"
#include "vlad/harness/io.hpp"

namespace vlad::harness {

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNoCcm: return "no_ccm";
    case Ablation::kNoGuidance: return "no_guidance";
  }
  return "full";
}

void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
  if (cfg.dataset_size < 2) fail("dataset_size must be at least 2");
  if (cfg.d < 2 || cfg.d > 256) fail("d must lie in 2..256");
  if (cfg.T_steps < 1 || cfg.T_steps > 10000) fail("T_steps must lie in 1..10000");
  if (!(cfg.beta_start > 0 && cfg.beta_start <= cfg.beta_end && cfg.beta_end < 1)) {
    fail("need 0 < beta_start <= beta_end < 1");
  }
  if (!(cfg.tau > 0)) fail("tau must be positive");
  if (!(cfg.lambda >= 0)) fail("lambda must be non-negative");
  if (!(cfg.sigma2 >= 0)) fail("sigma2 must be non-negative");
  if (!(cfg.learning_rate > 0 && cfg.learning_rate < 1)) fail("learning_rate must lie in (0, 1)");
  if (cfg.batch_size < 2) fail("batch_size must be at least 2");
  if (cfg.batch_size > cfg.dataset_size) fail("batch_size cannot exceed dataset_size");
  if (cfg.epochs < 0 || cfg.epochs > 100000) fail("epochs must lie in 0..100000");
  if (cfg.lora_rank < 1 || cfg.lora_rank > cfg.d) fail("lora_rank must lie in 1..d");
  if (cfg.eval_size < 2) fail("eval_size must be at least 2");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename Num>
Num parse_number(const std::string& key, const std::string& value) {
  Num out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config: " + key + " = '" + value + "' is not a valid number");
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
      {"dataset_path", [](RunConfig& c, const std::string& v) { c.dataset_path = v; }},
      {"dataset_size",
       [](RunConfig& c, const std::string& v) { c.dataset_size = parse_number<std::size_t>("dataset_size", v); }},
      {"d", [](RunConfig& c, const std::string& v) { c.d = parse_number<std::size_t>("d", v); }},
      {"T_steps", [](RunConfig& c, const std::string& v) { c.T_steps = parse_number<int>("T_steps", v); }},
      {"beta_start", [](RunConfig& c, const std::string& v) { c.beta_start = parse_number<double>("beta_start", v); }},
      {"beta_end", [](RunConfig& c, const std::string& v) { c.beta_end = parse_number<double>("beta_end", v); }},
      {"tau", [](RunConfig& c, const std::string& v) { c.tau = parse_number<double>("tau", v); }},
      {"lambda", [](RunConfig& c, const std::string& v) { c.lambda = parse_number<double>("lambda", v); }},
      {"sigma2", [](RunConfig& c, const std::string& v) { c.sigma2 = parse_number<double>("sigma2", v); }},
      {"learning_rate",
       [](RunConfig& c, const std::string& v) { c.learning_rate = parse_number<double>("learning_rate", v); }},
      {"batch_size",
       [](RunConfig& c, const std::string& v) { c.batch_size = parse_number<std::size_t>("batch_size", v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.epochs = parse_number<int>("epochs", v); }},
      {"lora",
       [](RunConfig& c, const std::string& v) {
         if (v != "on" && v != "off") throw ConfigError("config: lora must be on or off, got '" + v + "'");
         c.lora = v == "on";
       }},
      {"lora_rank", [](RunConfig& c, const std::string& v) { c.lora_rank = parse_number<std::size_t>("lora_rank", v); }},
      {"ablation",
       [](RunConfig& c, const std::string& v) {
         if (v == "full") {
           c.ablation = Ablation::kFull;
         } else if (v == "no_ccm") {
           c.ablation = Ablation::kNoCcm;
         } else if (v == "no_guidance") {
           c.ablation = Ablation::kNoGuidance;
         } else {
           throw ConfigError("config: ablation must be full, no_ccm or no_guidance, got '" + v + "'");
         }
       }},
      {"reverse_variance",
       [](RunConfig& c, const std::string& v) {
         if (v == "beta") {
           c.reverse_variance = diffusion::ReverseVariance::kBeta;
         } else if (v == "posterior") {
           c.reverse_variance = diffusion::ReverseVariance::kPosterior;
         } else {
           throw ConfigError("config: reverse_variance must be beta or posterior, got '" + v + "'");
         }
       }},
      {"eval_size", [](RunConfig& c, const std::string& v) { c.eval_size = parse_number<std::size_t>("eval_size", v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("config line " + std::to_string(number) + ": repeated key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* seed = std::getenv("VLAD_SEED"); seed && *seed) {
    cfg.seed = parse_number<std::uint64_t>("VLAD_SEED", seed);
  }
}

std::size_t thread_count() {
  if (const char* threads = std::getenv("VLAD_THREADS"); threads && *threads) {
    const auto n = parse_number<std::size_t>("VLAD_THREADS", threads);
    if (n < 1 || n > 256) throw ConfigError("VLAD_THREADS must lie in 1..256");
    return n;
  }
  return 1;
}

std::string format_config(const RunConfig& c) {
  std::ostringstream out;
  out << "seed = " << c.seed << '\n'
      << "dataset_path = " << c.dataset_path << '\n'
      << "dataset_size = " << c.dataset_size << '\n'
      << "d = " << c.d << '\n'
      << "T_steps = " << c.T_steps << '\n'
      << "beta_start = " << format_double(c.beta_start) << '\n'
      << "beta_end = " << format_double(c.beta_end) << '\n'
      << "tau = " << format_double(c.tau) << '\n'
      << "lambda = " << format_double(c.lambda) << '\n'
      << "sigma2 = " << format_double(c.sigma2) << '\n'
      << "learning_rate = " << format_double(c.learning_rate) << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "epochs = " << c.epochs << '\n'
      << "lora = " << (c.lora ? "on" : "off") << '\n'
      << "lora_rank = " << c.lora_rank << '\n'
      << "ablation = " << ablation_name(c.ablation) << '\n'
      << "reverse_variance = " << (c.reverse_variance == diffusion::ReverseVariance::kBeta ? "beta" : "posterior") << '\n'
      << "eval_size = " << c.eval_size << '\n';
  return out.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : format_config(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

diffusion::NoiseSchedule schedule_of(const RunConfig& cfg) {
  return diffusion::build_schedule(cfg.T_steps, cfg.beta_start, cfg.beta_end);
}

}  // namespace vlad::harness
