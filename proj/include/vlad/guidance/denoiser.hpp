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

#include <array>
#include <vector>

#include "vlad/core/params.hpp"
#include "vlad/diffusion/schedule.hpp"

namespace vlad::guidance {

inline constexpr std::size_t kTimeEmbedDim = 8;

struct DenoiserDims {
  std::size_t pixels = 256;
  std::size_t layout = 24;
  std::size_t d = 16;
  std::size_t hidden1 = 1024;
  std::size_t hidden2 = 512;
  std::size_t input_width() const { return pixels + layout + d + kTimeEmbedDim; }
};

/// [sin(t f_k) for k = 0..3, cos(t f_k) for k = 0..3] with f_k = 100^(-k/3).
std::array<double, kTimeEmbedDim> timestep_embedding(int t);

/// den.w1 [hidden1 x input] feeds a sine layer. Its layout columns get a
/// Fourier init: unit u reads slot u % 3 with integer spatial frequencies
/// (ky, kx) in 0..8 along that slot's row/col fields and random phases on
/// its presence and glyph fields. Canvas columns ~ N(0, 0.002^2), text and
/// time columns ~ N(0, 0.05^2), bias ~ U(-pi, pi). The two later layers
/// (den.w2, den.w3) are fan-in uniform.
template <typename Real>
void init_denoiser_params(ParamSet<Real>& params, Rng& rng, const DenoiserDims& dims);

/// eps_hat for a batch: the network reads concat(x_t, z, t_text, emb(t)) and
/// predicts a clean canvas D, then eps_hat = (x_t - sqrt(abar_t) D) / sqrt(1 - abar_t).
/// timesteps holds one value in 1..T per row.
template <typename Real>
Var guided_denoise(const Bound<Real>& p, Var xt, Var z, Var t_text, const std::vector<int>& timesteps,
                   const diffusion::NoiseSchedule& schedule);

/// Plain evaluation of guided_denoise with one timestep for every row.
template <typename Real>
Tensor<Real> denoise(const ParamSet<Real>& params, const Tensor<Real>& xt, const Tensor<Real>& z,
                     const Tensor<Real>& t_text, int timestep, const diffusion::NoiseSchedule& schedule);

/// Per-row weights min(1, (1 - abar_t) / abar_t) applied to the noise loss.
template <typename Real>
Tensor<Real> snr_weights(const std::vector<int>& timesteps, const diffusion::NoiseSchedule& schedule);

}  // namespace vlad::guidance
