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

#include "vlad/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vlad/core/error.hpp"

namespace vlad::diffusion {

NoiseSchedule build_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ConfigError("schedule needs at least one step");
  if (!(beta_start > 0 && beta_start <= beta_end && beta_end < 1)) {
    throw ConfigError("schedule needs 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  double running = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    const double beta = t == steps && steps > 1 ? beta_end : beta_start + frac * (beta_end - beta_start);
    s.beta.push_back(beta);
    s.alpha.push_back(1.0 - beta);
    running *= 1.0 - beta;
    s.alpha_bar.push_back(running);
  }
  return s;
}

namespace {

void check_step(const NoiseSchedule& s, int t, int lowest) {
  if (t < lowest || t > s.steps) {
    throw DomainError("timestep " + std::to_string(t) + " outside " + std::to_string(lowest) + ".." +
                      std::to_string(s.steps));
  }
}

}  // namespace

double reverse_variance(const NoiseSchedule& s, int t, ReverseVariance kind) {
  check_step(s, t, 1);
  if (kind == ReverseVariance::kBeta) return s.beta_at(t);
  return (1.0 - s.alpha_bar_at(t - 1)) / (1.0 - s.alpha_bar_at(t)) * s.beta_at(t);
}

template <typename Real>
DiffusionSample<Real> forward_diffuse_with(const Tensor<Real>& x0, int t, const NoiseSchedule& s,
                                           const Tensor<Real>& eps) {
  check_step(s, t, 0);
  if (x0.shape() != eps.shape()) {
    throw DimensionError("forward_diffuse: x0 " + shape_string(x0.shape()) + " vs noise " + shape_string(eps.shape()));
  }
  for (Real v : x0.values()) {
    if (!(v >= Real(-1) && v <= Real(1))) throw DomainError("forward_diffuse: x0 value outside [-1, 1]");
  }
  const Real a = static_cast<Real>(std::sqrt(s.alpha_bar_at(t)));
  const Real b = static_cast<Real>(std::sqrt(1.0 - s.alpha_bar_at(t)));
  Tensor<Real> xt(x0.shape());
  auto out = xt.mutable_values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return {x0, t, eps, xt};
}

template <typename Real>
DiffusionSample<Real> forward_diffuse(const Tensor<Real>& x0, int t, const NoiseSchedule& s, Rng& rng) {
  check_step(s, t, 0);
  return forward_diffuse_with(x0, t, s, gauss_sample<Real>(rng, x0.shape()));
}

template <typename Real>
Tensor<Real> forward_step(const Tensor<Real>& prev, int t, const NoiseSchedule& s, Rng& rng) {
  check_step(s, t, 1);
  const Real a = static_cast<Real>(std::sqrt(s.alpha_at(t)));
  const Real b = static_cast<Real>(std::sqrt(s.beta_at(t)));
  Tensor<Real> out(prev.shape());
  auto o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * prev[i] + b * static_cast<Real>(rng.gaussian());
  return out;
}

template <typename Real>
ReverseStep<Real> mu_from_eps(const Tensor<Real>& xt, const Tensor<Real>& eps_hat, int t, const NoiseSchedule& s,
                              ReverseVariance kind) {
  check_step(s, t, 1);
  if (xt.shape() != eps_hat.shape()) {
    throw DimensionError("mu_from_eps: x_t " + shape_string(xt.shape()) + " vs eps_hat " +
                         shape_string(eps_hat.shape()));
  }
  const double coef = s.beta_at(t) / std::sqrt(1.0 - s.alpha_bar_at(t));
  const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha_at(t));
  Tensor<Real> mu(xt.shape());
  auto m = mu.mutable_values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = static_cast<Real>((static_cast<double>(xt[i]) - coef * static_cast<double>(eps_hat[i])) * inv_sqrt_alpha);
  }
  return {mu, reverse_variance(s, t, kind)};
}

template <typename Real>
Real diffusion_loss(const std::vector<DiffusionSample<Real>>& batch, const std::vector<Tensor<Real>>& eps_hat) {
  if (batch.size() != eps_hat.size() || batch.empty()) {
    throw DimensionError("diffusion_loss: " + std::to_string(batch.size()) + " samples vs " +
                         std::to_string(eps_hat.size()) + " predictions");
  }
  double total = 0;
  std::size_t count = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].eps.shape() != eps_hat[b].shape()) {
      throw DimensionError("diffusion_loss: noise " + shape_string(batch[b].eps.shape()) + " vs prediction " +
                           shape_string(eps_hat[b].shape()));
    }
    for (std::size_t i = 0; i < eps_hat[b].size(); ++i) {
      const double diff = static_cast<double>(batch[b].eps[i]) - eps_hat[b][i];
      total += diff * diff;
    }
    count += eps_hat[b].size();
  }
  return static_cast<Real>(total / static_cast<double>(count));
}

template <typename Real>
Var diffusion_loss(Tape<Real>& tape, Var eps, Var eps_hat) {
  if (tape.value(eps).shape() != tape.value(eps_hat).shape()) {
    throw DimensionError("diffusion_loss: noise " + shape_string(tape.value(eps).shape()) + " vs prediction " +
                         shape_string(tape.value(eps_hat).shape()));
  }
  Var diff = tape.sub(eps_hat, eps);
  return tape.mean(tape.mul(diff, diff));
}

template <typename Real>
Var weighted_diffusion_loss(Tape<Real>& tape, Var eps, Var eps_hat, Var weights) {
  if (tape.value(eps).shape() != tape.value(eps_hat).shape()) {
    throw DimensionError("diffusion_loss: noise " + shape_string(tape.value(eps).shape()) + " vs prediction " +
                         shape_string(tape.value(eps_hat).shape()));
  }
  Var diff = tape.sub(eps_hat, eps);
  return tape.mean(tape.mul_rows(tape.mul(diff, diff), weights));
}

template <typename Real>
Tensor<Real> reverse_sample(const Denoiser<Real>& denoiser, std::size_t rows, std::size_t pixels,
                            const NoiseSchedule& s, const Rng& rng, const SamplerOptions& options) {
  std::vector<Rng> streams;
  streams.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) streams.push_back(rng.split(options.first_row + i));

  Tensor<Real> x({rows, pixels});
  {
    auto v = x.mutable_values();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < pixels; ++j) v[i * pixels + j] = static_cast<Real>(streams[i].gaussian());
    }
  }
  for (int t = s.steps; t >= 1; --t) {
    Tensor<Real> eps_hat = denoiser(x, t);
    ReverseStep<Real> step = mu_from_eps(x, eps_hat, t, s, options.variance);
    x = step.mu;
    if (t > 1 && !options.deterministic && step.sigma2 > 0) {
      const Real sigma = static_cast<Real>(std::sqrt(step.sigma2));
      auto v = x.mutable_values();
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < pixels; ++j) v[i * pixels + j] += sigma * static_cast<Real>(streams[i].gaussian());
      }
    }
    if (!x.all_finite()) throw NumericError("reverse_sample: non-finite state at t = " + std::to_string(t));
  }
  for (Real& v : x.mutable_values()) v = (std::clamp(v, Real(-1), Real(1)) + Real(1)) / Real(2);
  return x;
}

#define VLAD_INSTANTIATE(Real)                                                                                    \
  template DiffusionSample<Real> forward_diffuse(const Tensor<Real>&, int, const NoiseSchedule&, Rng&);          \
  template DiffusionSample<Real> forward_diffuse_with(const Tensor<Real>&, int, const NoiseSchedule&,            \
                                                      const Tensor<Real>&);                                       \
  template Tensor<Real> forward_step(const Tensor<Real>&, int, const NoiseSchedule&, Rng&);                       \
  template ReverseStep<Real> mu_from_eps(const Tensor<Real>&, const Tensor<Real>&, int, const NoiseSchedule&,     \
                                         ReverseVariance);                                                        \
  template Real diffusion_loss(const std::vector<DiffusionSample<Real>>&, const std::vector<Tensor<Real>>&);      \
  template Var diffusion_loss(Tape<Real>&, Var, Var);                                                             \
  template Var weighted_diffusion_loss(Tape<Real>&, Var, Var, Var);                                               \
  template Tensor<Real> reverse_sample(const Denoiser<Real>&, std::size_t, std::size_t, const NoiseSchedule&,     \
                                       const Rng&, const SamplerOptions&);

VLAD_INSTANTIATE(float)
VLAD_INSTANTIATE(double)

#undef VLAD_INSTANTIATE

}  // namespace vlad::diffusion
