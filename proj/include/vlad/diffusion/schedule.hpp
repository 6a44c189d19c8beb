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

#include <functional>
#include <vector>

#include "vlad/core/rng.hpp"
#include "vlad/core/tape.hpp"
#include "vlad/core/tensor.hpp"

namespace vlad::diffusion {

/// beta_t, alpha_t = 1 - beta_t and alpha_bar_t = prod_{s<=t} alpha_s for
/// t = 1..steps (stored at index t-1). Computed in double precision.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  double beta_at(int t) const { return beta.at(static_cast<std::size_t>(t - 1)); }
  double alpha_at(int t) const { return alpha.at(static_cast<std::size_t>(t - 1)); }
  /// alpha_bar_0 is 1 by convention.
  double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar.at(static_cast<std::size_t>(t - 1)); }
};

/// Linear beta from beta_start (t = 1) to beta_end (t = steps).
NoiseSchedule build_schedule(int steps, double beta_start, double beta_end);

enum class ReverseVariance { kBeta, kPosterior };

/// sigma_t^2 for the chosen convention; the posterior form is
/// (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t.
double reverse_variance(const NoiseSchedule& s, int t, ReverseVariance kind);

template <typename Real>
struct DiffusionSample {
  Tensor<Real> x0;
  int t = 0;
  Tensor<Real> eps;
  Tensor<Real> xt;
};

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps with eps ~ N(0, I).
/// t = 0 returns x0 unchanged. Throws DomainError for t outside 0..steps
/// or x0 outside [-1, 1].
template <typename Real>
DiffusionSample<Real> forward_diffuse(const Tensor<Real>& x0, int t, const NoiseSchedule& s, Rng& rng);
/// Same with the noise supplied.
template <typename Real>
DiffusionSample<Real> forward_diffuse_with(const Tensor<Real>& x0, int t, const NoiseSchedule& s,
                                           const Tensor<Real>& eps);
/// One transition x_t = sqrt(alpha_t) x_{t-1} + sqrt(beta_t) eps.
template <typename Real>
Tensor<Real> forward_step(const Tensor<Real>& prev, int t, const NoiseSchedule& s, Rng& rng);

template <typename Real>
struct ReverseStep {
  Tensor<Real> mu;
  double sigma2 = 0.0;
};

/// mu = (x_t - beta_t / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t).
template <typename Real>
ReverseStep<Real> mu_from_eps(const Tensor<Real>& xt, const Tensor<Real>& eps_hat, int t, const NoiseSchedule& s,
                              ReverseVariance kind = ReverseVariance::kBeta);

/// Mean of (eps - eps_hat)^2 over batch and elements.
template <typename Real>
Real diffusion_loss(const std::vector<DiffusionSample<Real>>& batch, const std::vector<Tensor<Real>>& eps_hat);
template <typename Real>
Var diffusion_loss(Tape<Real>& tape, Var eps, Var eps_hat);
/// Like diffusion_loss but row i's squared error is scaled by weights[i].
template <typename Real>
Var weighted_diffusion_loss(Tape<Real>& tape, Var eps, Var eps_hat, Var weights);

/// Maps x_t [N x P] and one timestep to eps_hat [N x P].
template <typename Real>
using Denoiser = std::function<Tensor<Real>(const Tensor<Real>& xt, int t)>;

struct SamplerOptions {
  bool deterministic = false;
  ReverseVariance variance = ReverseVariance::kBeta;
  /// Row i draws from rng.split(first_row + i), so a chunk of a larger batch
  /// reproduces the same rows regardless of how the batch is split.
  std::uint64_t first_row = 0;
};

/// Ancestral sampling from x_T ~ N(0, I) down to x_0; noise is skipped at
/// t = 1 and everywhere when deterministic. Output is clamped to [-1, 1] and
/// mapped to [0, 1].
template <typename Real>
Tensor<Real> reverse_sample(const Denoiser<Real>& denoiser, std::size_t rows, std::size_t pixels,
                            const NoiseSchedule& s, const Rng& rng, const SamplerOptions& options);

}  // namespace vlad::diffusion
