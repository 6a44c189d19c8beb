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
#include <string>
#include <vector>

#include "vlad/diffusion/schedule.hpp"

namespace vlad::harness {

enum class Ablation { kFull, kNoCcm, kNoGuidance };

const char* ablation_name(Ablation a);

struct RunConfig {
  std::uint64_t seed = 0;
  std::string dataset_path;  // empty: scenes are generated on the fly
  std::size_t dataset_size = 2000;
  std::size_t d = 16;
  int T_steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double tau = 0.07;
  double lambda = 1.0;
  double sigma2 = 0.01;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  int epochs = 30;
  bool lora = false;
  std::size_t lora_rank = 2;
  Ablation ablation = Ablation::kFull;
  diffusion::ReverseVariance reverse_variance = diffusion::ReverseVariance::kBeta;
  std::size_t eval_size = 200;
};

/// Throws ConfigError for any value outside its documented range.
void validate(const RunConfig& cfg);

/// Flat "key = value" text; '#' starts a comment. Unknown keys, repeated
/// keys and malformed lines are ConfigErrors naming the line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// VLAD_SEED replaces the seed when set.
void apply_env_overrides(RunConfig& cfg);
/// VLAD_THREADS, default 1.
std::size_t thread_count();

/// Every key in a fixed order, one "key = value" per line.
std::string format_config(const RunConfig& cfg);
/// FNV-1a 64 of format_config.
std::uint64_t config_hash(const RunConfig& cfg);

diffusion::NoiseSchedule schedule_of(const RunConfig& cfg);

}  // namespace vlad::harness
