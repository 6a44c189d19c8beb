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

#include "vlad/core/adam.hpp"

#include <cmath>
#include <string>

#include "vlad/core/error.hpp"

namespace vlad {

template <typename Real>
void adam_step(AdamState<Real>& state, std::vector<Tensor<Real>*> params,
               const std::vector<Tensor<Real>>& grads) {
  const AdamConfig& cfg = state.config;
  if (!(cfg.beta1 > 0 && cfg.beta1 < 1 && cfg.beta2 > 0 && cfg.beta2 < 1)) {
    throw ConfigError("adam decays must lie in (0, 1)");
  }
  if (!(cfg.learning_rate > 0) || !(cfg.epsilon > 0)) {
    throw ConfigError("adam learning rate and epsilon must be positive");
  }
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.first_moment.empty()) {
    for (const Tensor<Real>* p : params) {
      state.first_moment.emplace_back(p->shape());
      state.second_moment.emplace_back(p->shape());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape() || params[i]->shape() != state.first_moment[i].shape()) {
      throw DimensionError("adam_step: parameter " + shape_string(params[i]->shape()) + ", gradient " +
                           shape_string(grads[i].shape()) + ", moment " +
                           shape_string(state.first_moment[i].shape()));
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const Real c1 = static_cast<Real>(1.0 / (1.0 - std::pow(cfg.beta1, t)));
  const Real c2 = static_cast<Real>(1.0 / (1.0 - std::pow(cfg.beta2, t)));
  const Real b1 = static_cast<Real>(cfg.beta1), b2 = static_cast<Real>(cfg.beta2);
  const Real lr = static_cast<Real>(cfg.learning_rate), eps = static_cast<Real>(cfg.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->mutable_values();
    auto m = state.first_moment[i].mutable_values();
    auto v = state.second_moment[i].mutable_values();
    auto g = grads[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (Real(1) - b1) * g[j];
      v[j] = b2 * v[j] + (Real(1) - b2) * g[j] * g[j];
      p[j] -= lr * (m[j] * c1) / (std::sqrt(v[j] * c2) + eps);
    }
  }
}

template void adam_step<float>(AdamState<float>&, std::vector<Tensor<float>*>,
                               const std::vector<Tensor<float>>&);
template void adam_step<double>(AdamState<double>&, std::vector<Tensor<double>*>,
                                const std::vector<Tensor<double>>&);

}  // namespace vlad
