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

#include <vector>

#include "vlad/align/prompt.hpp"
#include "vlad/core/params.hpp"
#include "vlad/data/glyphs.hpp"
#include "vlad/diffusion/schedule.hpp"
#include "vlad/harness/config.hpp"

namespace vlad::harness {

/// Child streams of Rng(seed). Each consumer owns one key so that adding
/// draws in one place never shifts another.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kData = 2;
inline constexpr std::uint64_t kTrain = 3;
inline constexpr std::uint64_t kSample = 4;
inline constexpr std::uint64_t kTestSet = 5;
inline constexpr std::uint64_t kLayout = 6;
}  // namespace stream

/// Rows per generation chunk. Fixed so results never depend on the thread
/// count.
inline constexpr std::size_t kGenerationChunk = 50;

struct Model {
  RunConfig config;
  ParamSet<float> params;
  diffusion::NoiseSchedule schedule;
};

/// Fresh parameters for the config: encoders, composition, layout generator,
/// denoiser and, when enabled, low-rank adapters on frozen bases.
Model init_model(const RunConfig& cfg);

bool uses_ccm(const RunConfig& cfg);
bool uses_guidance(const RunConfig& cfg);

std::vector<align::TokenIds> tokenize_all(const std::vector<data::SceneSpec>& specs);
Tensor<float> canvases_of(const std::vector<data::SceneSpec>& specs);
Tensor<float> canvas_rows(const std::vector<data::Canvas>& canvases);

/// Composed embeddings (normalize(t_g) alone for the no_ccm variant).
Tensor<float> text_embeddings(const Model& model, const std::vector<align::TokenIds>& prompts);

struct GenerationOptions {
  bool deterministic = false;
  std::size_t threads = 1;
};

/// One canvas per prompt via the layout generator and the reverse sampler.
/// Row i uses streams keyed by i, so output is independent of chunking and
/// thread count. Returns [N x 256] in [0, 1].
Tensor<float> generate(const Model& model, const std::vector<align::TokenIds>& prompts, const GenerationOptions& options);
/// Same, but conditioned on the given layouts [N x 24] instead of sampling
/// them from the layout generator.
Tensor<float> generate_with_layouts(const Model& model, const std::vector<align::TokenIds>& prompts,
                                    const Tensor<float>& layouts, const GenerationOptions& options);

/// Held-out scenes for evaluation, drawn from the test-set stream.
std::vector<data::SceneSpec> test_scenes(const RunConfig& cfg);

}  // namespace vlad::harness
