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
#include <vector>

#include "vlad/core/tensor.hpp"

namespace vlad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected adaptive-moment optimizer state. Moments are created on the
/// first step with the shapes of the parameters they track.
template <typename Real>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor<Real>> first_moment;
  std::vector<Tensor<Real>> second_moment;
};

/// One update of every parameter in place. params[i] pairs with grads[i].
template <typename Real>
void adam_step(AdamState<Real>& state, std::vector<Tensor<Real>*> params,
               const std::vector<Tensor<Real>>& grads);

}  // namespace vlad
