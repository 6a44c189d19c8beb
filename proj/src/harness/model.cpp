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

#include "vlad/harness/model.hpp"

#include <thread>

#include "vlad/align/encoder.hpp"
#include "vlad/core/error.hpp"
#include "vlad/guidance/denoiser.hpp"
#include "vlad/guidance/layout.hpp"
#include "vlad/guidance/lora.hpp"

namespace vlad::harness {

bool uses_ccm(const RunConfig& cfg) { return cfg.ablation != Ablation::kNoCcm; }
bool uses_guidance(const RunConfig& cfg) { return cfg.ablation != Ablation::kNoGuidance; }

Model init_model(const RunConfig& cfg) {
  validate(cfg);
  Model m;
  m.config = cfg;
  m.schedule = schedule_of(cfg);
  Rng rng = Rng(cfg.seed).split(stream::kInit);
  align::init_encoder_params(m.params, rng, {cfg.d, 64, 64});
  guidance::init_tlg_params(m.params, rng, {cfg.d, 128});
  guidance::DenoiserDims dims;
  dims.d = cfg.d;
  guidance::init_denoiser_params(m.params, rng, dims);
  if (cfg.lora) guidance::attach_lora(m.params, guidance::default_lora_targets(), cfg.lora_rank, rng);
  return m;
}

std::vector<align::TokenIds> tokenize_all(const std::vector<data::SceneSpec>& specs) {
  std::vector<align::TokenIds> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(align::tokenize(data::scene_to_prompt(s)));
  return out;
}

Tensor<float> canvas_rows(const std::vector<data::Canvas>& canvases) {
  if (canvases.empty()) throw DimensionError("no canvases");
  std::vector<float> out;
  out.reserve(canvases.size() * data::kPixels);
  for (const auto& c : canvases) out.insert(out.end(), c.begin(), c.end());
  return Tensor<float>({canvases.size(), data::kPixels}, std::move(out));
}

Tensor<float> canvases_of(const std::vector<data::SceneSpec>& specs) {
  std::vector<data::Canvas> c;
  c.reserve(specs.size());
  for (const auto& s : specs) c.push_back(data::render_scene(s));
  return canvas_rows(c);
}

Tensor<float> text_embeddings(const Model& model, const std::vector<align::TokenIds>& prompts) {
  return align::embed_prompts(model.params, prompts, uses_ccm(model.config));
}

namespace {

Tensor<float> rows_of(const Tensor<float>& t, std::size_t first, std::size_t count) {
  auto span = t.values().subspan(first * t.cols(), count * t.cols());
  return Tensor<float>({count, t.cols()}, std::vector<float>(span.begin(), span.end()));
}

Tensor<float> generate_chunk(const Model& model, const Tensor<float>& text, const Tensor<float>* layouts,
                             std::size_t first, const GenerationOptions& options) {
  const std::size_t n = text.rows();
  const Rng root(model.config.seed);
  const Rng layout_root = root.split(stream::kLayout);
  Tensor<float> z({n, guidance::kLayoutDim});
  if (layouts) {
    z = rows_of(*layouts, first, n);
  } else if (uses_guidance(model.config)) {
    std::vector<float> rows;
    rows.reserve(n * guidance::kLayoutDim);
    for (std::size_t i = 0; i < n; ++i) {
      Rng r = layout_root.split(first + i);
      Tensor<float> zi = guidance::tlg_forward(model.params, rows_of(text, i, 1), r, options.deterministic,
                                               model.config.sigma2);
      rows.insert(rows.end(), zi.values().begin(), zi.values().end());
    }
    z = Tensor<float>({n, guidance::kLayoutDim}, std::move(rows));
  }
  diffusion::Denoiser<float> den = [&](const Tensor<float>& xt, int t) {
    return guidance::denoise(model.params, xt, z, text, t, model.schedule);
  };
  diffusion::SamplerOptions so;
  so.deterministic = options.deterministic;
  so.variance = model.config.reverse_variance;
  so.first_row = first;
  return diffusion::reverse_sample(den, n, data::kPixels, model.schedule, root.split(stream::kSample), so);
}

Tensor<float> generate_impl(const Model& model, const std::vector<align::TokenIds>& prompts,
                            const Tensor<float>* layouts, const GenerationOptions& options) {
  if (prompts.empty()) throw DimensionError("generate: no prompts");
  if (layouts && (layouts->rank() != 2 || layouts->rows() != prompts.size() || layouts->cols() != guidance::kLayoutDim)) {
    throw DimensionError("generate: layouts " + shape_string(layouts->shape()) + " for " +
                         std::to_string(prompts.size()) + " prompts");
  }
  const Tensor<float> text = text_embeddings(model, prompts);
  const std::size_t n = prompts.size();
  const std::size_t chunks = (n + kGenerationChunk - 1) / kGenerationChunk;
  std::vector<Tensor<float>> parts(chunks);
  std::vector<std::exception_ptr> errors(chunks);
  auto work = [&](std::size_t c) {
    try {
      const std::size_t first = c * kGenerationChunk;
      const std::size_t count = std::min(kGenerationChunk, n - first);
      parts[c] = generate_chunk(model, rows_of(text, first, count), layouts, first, options);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, chunks));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < chunks; c += workers) work(c);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<float> out;
  out.reserve(n * data::kPixels);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return Tensor<float>({n, data::kPixels}, std::move(out));
}

}  // namespace

Tensor<float> generate(const Model& model, const std::vector<align::TokenIds>& prompts,
                       const GenerationOptions& options) {
  return generate_impl(model, prompts, nullptr, options);
}

Tensor<float> generate_with_layouts(const Model& model, const std::vector<align::TokenIds>& prompts,
                                    const Tensor<float>& layouts, const GenerationOptions& options) {
  return generate_impl(model, prompts, &layouts, options);
}

std::vector<data::SceneSpec> test_scenes(const RunConfig& cfg) {
  return data::sample_scenes(Rng(cfg.seed).split(stream::kTestSet), 0, cfg.eval_size, {});
}

}  // namespace vlad::harness
