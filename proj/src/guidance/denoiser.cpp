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

#include "vlad/guidance/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vlad/core/error.hpp"
#include "vlad/guidance/layout.hpp"

namespace vlad::guidance {

std::array<double, kTimeEmbedDim> timestep_embedding(int t) {
  std::array<double, kTimeEmbedDim> out{};
  constexpr std::size_t half = kTimeEmbedDim / 2;
  for (std::size_t k = 0; k < half; ++k) {
    const double freq = std::pow(100.0, -static_cast<double>(k) / 3.0);
    out[k] = std::sin(t * freq);
    out[half + k] = std::cos(t * freq);
  }
  return out;
}

template <typename Real>
void init_denoiser_params(ParamSet<Real>& params, Rng& rng, const DenoiserDims& dims) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const std::size_t in = dims.input_width(), h1 = dims.hidden1, h2 = dims.hidden2;
  Tensor<Real> w1({h1, in});
  auto w = w1.mutable_values();
  const std::size_t layout0 = dims.pixels;
  const std::size_t cond0 = dims.pixels + dims.layout;
  const double span = kTwoPi / align::kCanvasSide * align::kMaxOrigin;
  for (std::size_t u = 0; u < h1; ++u) {
    Real* row = w.data() + u * in;
    for (std::size_t j = 0; j < dims.pixels; ++j) row[j] = static_cast<Real>(0.002 * rng.gaussian());
    if (dims.layout == kLayoutDim) {
      Real* slot = row + layout0 + (u % kSlots) * kSlotWidth;
      const auto ky = static_cast<double>(rng.below(9));
      const auto kx = static_cast<double>(rng.below(9));
      slot[0] = static_cast<Real>(kTwoPi * rng.uniform());
      slot[1] = static_cast<Real>(ky * span);
      slot[2] = static_cast<Real>(kx * span);
      for (std::size_t g = 3; g < kSlotWidth; ++g) slot[g] = static_cast<Real>(kTwoPi * rng.uniform());
    }
    for (std::size_t j = cond0; j < in; ++j) row[j] = static_cast<Real>(0.05 * rng.gaussian());
  }
  Tensor<Real> b1({h1});
  for (Real& v : b1.mutable_values()) v = static_cast<Real>(std::numbers::pi * (2.0 * rng.uniform() - 1.0));
  params.add("den.w1", std::move(w1));
  params.add("den.b1", std::move(b1));
  params.add("den.w2", fan_in_uniform<Real>(rng, {h2, h1}, h1));
  params.add("den.b2", fan_in_uniform<Real>(rng, {h2}, h1));
  params.add("den.w3", fan_in_uniform<Real>(rng, {dims.pixels, h2}, h2));
  params.add("den.b3", fan_in_uniform<Real>(rng, {dims.pixels}, h2));
}

template <typename Real>
Var guided_denoise(const Bound<Real>& p, Var xt, Var z, Var t_text, const std::vector<int>& timesteps,
                   const diffusion::NoiseSchedule& schedule) {
  Tape<Real>& tape = p.tape();
  const std::size_t n = tape.value(xt).rows();
  if (timesteps.size() != n || tape.value(z).rows() != n || tape.value(t_text).rows() != n) {
    throw DimensionError("guided_denoise: batch sizes disagree (x_t " + shape_string(tape.value(xt).shape()) +
                         ", z " + shape_string(tape.value(z).shape()) + ", text " +
                         shape_string(tape.value(t_text).shape()) + ", " + std::to_string(timesteps.size()) +
                         " timesteps)");
  }
  std::vector<Real> emb;
  std::vector<Real> keep(n), mix(n);
  emb.reserve(n * kTimeEmbedDim);
  for (std::size_t i = 0; i < n; ++i) {
    const int t = timesteps[i];
    if (t < 1 || t > schedule.steps) throw DomainError("guided_denoise: timestep " + std::to_string(t) + " out of range");
    for (double e : timestep_embedding(t)) emb.push_back(static_cast<Real>(e));
    const double abar = schedule.alpha_bar_at(t);
    keep[i] = static_cast<Real>(1.0 / std::sqrt(1.0 - abar));
    mix[i] = static_cast<Real>(std::sqrt(abar) / std::sqrt(1.0 - abar));
  }
  Var temb = tape.constant(Tensor<Real>({n, kTimeEmbedDim}, std::move(emb)));
  Var input = tape.concat({xt, z, t_text, temb}, 1);
  const std::size_t expected = tape.value(p("den.w1")).cols();
  if (tape.value(input).cols() != expected) {
    throw DimensionError("guided_denoise: input width " + std::to_string(tape.value(input).cols()) +
                         " but the guidance layer expects " + std::to_string(expected));
  }
  Var h1 = tape.sin(linear(p, input, "den.w1", "den.b1"));
  Var h2 = tape.relu(linear(p, h1, "den.w2", "den.b2"));
  Var clean = linear(p, h2, "den.w3", "den.b3");
  Var scaled_xt = tape.mul_rows(xt, tape.constant(Tensor<Real>({n}, std::move(keep))));
  Var scaled_clean = tape.mul_rows(clean, tape.constant(Tensor<Real>({n}, std::move(mix))));
  return tape.sub(scaled_xt, scaled_clean);
}

template <typename Real>
Tensor<Real> denoise(const ParamSet<Real>& params, const Tensor<Real>& xt, const Tensor<Real>& z,
                     const Tensor<Real>& t_text, int timestep, const diffusion::NoiseSchedule& schedule) {
  Tape<Real> tape;
  Bound<Real> p(tape, params);
  std::vector<int> ts(xt.rows(), timestep);
  return tape.value(guided_denoise(p, tape.constant(xt), tape.constant(z), tape.constant(t_text), ts, schedule));
}

template <typename Real>
Tensor<Real> snr_weights(const std::vector<int>& timesteps, const diffusion::NoiseSchedule& schedule) {
  std::vector<Real> w;
  w.reserve(timesteps.size());
  for (int t : timesteps) {
    const double abar = schedule.alpha_bar_at(t);
    w.push_back(static_cast<Real>(std::min(1.0, (1.0 - abar) / abar)));
  }
  return Tensor<Real>({timesteps.size()}, std::move(w));
}

#define VLAD_INSTANTIATE(Real)                                                                                \
  template void init_denoiser_params(ParamSet<Real>&, Rng&, const DenoiserDims&);                            \
  template Var guided_denoise(const Bound<Real>&, Var, Var, Var, const std::vector<int>&,                    \
                              const diffusion::NoiseSchedule&);                                              \
  template Tensor<Real> denoise(const ParamSet<Real>&, const Tensor<Real>&, const Tensor<Real>&,             \
                                const Tensor<Real>&, int, const diffusion::NoiseSchedule&);                  \
  template Tensor<Real> snr_weights(const std::vector<int>&, const diffusion::NoiseSchedule&);

VLAD_INSTANTIATE(float)
VLAD_INSTANTIATE(double)

#undef VLAD_INSTANTIATE

}  // namespace vlad::guidance
