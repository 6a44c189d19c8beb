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

#include <string>
#include <vector>

#include "vlad/core/params.hpp"

namespace vlad::guidance {

/// Low-rank update Delta W = A B^T for a base weight W [d_out x d_in],
/// with A [d_out x k] and B [d_in x k].
template <typename Real>
struct LoraAdapter {
  Tensor<Real> a;
  Tensor<Real> b;
  std::size_t rank = 0;
  std::string target;
};

/// Default adapted weights: the guidance matrix and both encoder perceptrons.
const std::vector<std::string>& default_lora_targets();

/// A ~ N(0, 0.02^2), B = 0 for base W [d_out x d_in].
template <typename Real>
LoraAdapter<Real> make_adapter(const Tensor<Real>& base, std::size_t rank, const std::string& target, Rng& rng);

/// (W + A B^T) x evaluated as W x + A (B^T x). x is [d_in] or [d_in x n].
template <typename Real>
Tensor<Real> lora_apply(const Tensor<Real>& base, const LoraAdapter<Real>& adapter, const Tensor<Real>& x);

/// W + A B^T.
template <typename Real>
Tensor<Real> lora_merge(const Tensor<Real>& base, const LoraAdapter<Real>& adapter);

/// Attaches an adapter to every target in the set and freezes those bases.
template <typename Real>
void attach_lora(ParamSet<Real>& params, const std::vector<std::string>& targets, std::size_t rank, Rng& rng);

/// Reads the adapter of a target back out of a parameter set.
template <typename Real>
LoraAdapter<Real> adapter_of(const ParamSet<Real>& params, const std::string& target);

/// Copy of the set with every adapter folded into its base weight and the
/// adapter entries removed.
template <typename Real>
ParamSet<Real> merge_all(const ParamSet<Real>& params);

}  // namespace vlad::guidance
