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

#include "vlad/harness/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "vlad/align/encoder.hpp"
#include "vlad/core/error.hpp"
#include "vlad/guidance/denoiser.hpp"
#include "vlad/guidance/layout.hpp"

namespace vlad::harness {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Tensor<float> repeat_rows(const Tensor<float>& t, std::size_t times) {
  std::vector<float> out;
  out.reserve(t.size() * times);
  for (std::size_t r = 0; r < times; ++r) out.insert(out.end(), t.values().begin(), t.values().end());
  return Tensor<float>({t.rows() * times, t.cols()}, std::move(out));
}

}  // namespace

StepLog train_step(Model& model, AdamState<float>& optimizer, const std::vector<data::SceneSpec>& scenes, Rng& noise) {
  const RunConfig& cfg = model.config;
  const std::size_t n = scenes.size();
  const std::size_t rows = n * kNoiseDraws;
  const std::vector<align::TokenIds> prompts = tokenize_all(scenes);
  const Tensor<float> canvases = canvases_of(scenes);

  Tape<float> tape;
  Bound<float> p(tape, model.params);

  align::TextBatch text = align::encode_text(p, prompts);
  Var t = uses_ccm(cfg) ? align::compose_ccm(p, text.global, text.locals, text.offsets)
                        : tape.normalize_rows(text.global);
  Var v = align::encode_image(p, canvases);
  Var l_align = align::contrastive_loss(tape, t, v, {cfg.tau, n});

  Var z_pred = tape.sigmoid(guidance::tlg_mean(p, t));
  Var l_tlg = guidance::tlg_loss(tape, z_pred, guidance::layout_targets<float>(scenes),
                                 guidance::layout_masks<float>(scenes));

  std::vector<int> timesteps(rows);
  for (int& ts : timesteps) ts = 1 + static_cast<int>(noise.below(static_cast<std::uint64_t>(cfg.T_steps)));
  Tensor<float> x0 = repeat_rows(canvases, kNoiseDraws);
  for (float& x : x0.mutable_values()) x = 2.0F * x - 1.0F;
  Tensor<float> eps = gauss_sample<float>(noise, {rows, data::kPixels});
  Tensor<float> xt({rows, data::kPixels});
  {
    auto out = xt.mutable_values();
    for (std::size_t r = 0; r < rows; ++r) {
      const double abar = model.schedule.alpha_bar_at(timesteps[r]);
      const auto a = static_cast<float>(std::sqrt(abar));
      const auto b = static_cast<float>(std::sqrt(1.0 - abar));
      for (std::size_t j = 0; j < data::kPixels; ++j) {
        const std::size_t k = r * data::kPixels + j;
        out[k] = a * x0[k] + b * eps[k];
      }
    }
  }
  Tensor<float> z_cond({rows, guidance::kLayoutDim});
  if (uses_guidance(cfg)) z_cond = repeat_rows(guidance::layout_targets<float>(scenes), kNoiseDraws);
  std::vector<Var> text_copies(kNoiseDraws, t);
  Var t_cond = tape.concat(text_copies, 0);
  Var eps_var = tape.constant(eps);
  Var eps_hat = guidance::guided_denoise(p, tape.constant(xt), tape.constant(z_cond), t_cond, timesteps, model.schedule);
  Var l_diff = diffusion::weighted_diffusion_loss(tape, eps_var, eps_hat,
                                                  tape.constant(guidance::snr_weights<float>(timesteps, model.schedule)));
  Var l_plain = diffusion::diffusion_loss(tape, eps_var, eps_hat);

  Var total = tape.add(tape.add(l_align, tape.scale(l_diff, cfg.lambda)), l_tlg);
  tape.backward(total);

  std::vector<Tensor<float>*> trainable;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    if (model.params.trainable(i)) trainable.push_back(&model.params.value_mut(i));
  }
  adam_step(optimizer, trainable, p.trainable_grads());
  for (const Tensor<float>* w : trainable) {
    if (!w->all_finite()) throw NumericError("training produced a non-finite parameter");
  }

  StepLog log;
  log.total = tape.value(total).item();
  log.align = tape.value(l_align).item();
  log.diff = tape.value(l_diff).item();
  log.diff_plain = tape.value(l_plain).item();
  log.tlg = tape.value(l_tlg).item();
  return log;
}

TrainResult train(const RunConfig& cfg, const std::function<void(const EpochSummary&)>& on_epoch) {
  TrainResult result{init_model(cfg), {}, {}, {}};
  result.optimizer.config.learning_rate = cfg.learning_rate;
  const Rng root(cfg.seed);
  const Rng data_root = root.split(stream::kData);
  Rng noise = root.split(stream::kTrain);

  std::vector<data::SceneSpec> fixed;
  if (!cfg.dataset_path.empty()) {
    for (const auto& r : data::dataset_read(cfg.dataset_path)) fixed.push_back(r.spec);
    if (fixed.size() < cfg.batch_size) throw ConfigError("dataset holds fewer records than one batch");
  }
  const std::size_t epoch_size = fixed.empty() ? cfg.dataset_size : fixed.size();
  std::size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<data::SceneSpec> scenes;
    if (fixed.empty()) {
      scenes = data::sample_scenes(data_root, static_cast<std::size_t>(epoch) * epoch_size, epoch_size, {});
    } else {
      scenes = fixed;
      Rng shuffle = data_root.split(static_cast<std::uint64_t>(epoch));
      for (std::size_t i = scenes.size(); i > 1; --i) std::swap(scenes[i - 1], scenes[shuffle.below(i)]);
    }
    std::vector<double> totals, aligns, diffs, tlgs, plains;
    for (std::size_t b = 0; b + cfg.batch_size <= epoch_size; b += cfg.batch_size) {
      std::vector<data::SceneSpec> batch(scenes.begin() + static_cast<std::ptrdiff_t>(b),
                                         scenes.begin() + static_cast<std::ptrdiff_t>(b + cfg.batch_size));
      StepLog log = train_step(result.model, result.optimizer, batch, noise);
      log.epoch = epoch;
      log.step = step++;
      result.steps.push_back(log);
      totals.push_back(log.total);
      aligns.push_back(log.align);
      diffs.push_back(log.diff);
      tlgs.push_back(log.tlg);
      plains.push_back(log.diff_plain);
    }
    EpochSummary s;
    s.epoch = epoch;
    s.median_total = median(totals);
    s.median_align = median(aligns);
    s.median_diff = median(diffs);
    s.median_tlg = median(tlgs);
    double plain = 0;
    for (double x : plains) plain += x;
    s.mean_diff_plain = plains.empty() ? 0 : plain / static_cast<double>(plains.size());
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(s);
    if (on_epoch) on_epoch(s);
  }
  return result;
}

}  // namespace vlad::harness
