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

namespace vlad::guidance {

/// Layout latent: 3 slots of [presence, row / 11, col / 11, one-hot glyph (5)].
inline constexpr std::size_t kSlotWidth = 8;
inline constexpr std::size_t kSlots = 3;
inline constexpr std::size_t kLayoutDim = kSlots * kSlotWidth;  // 24

/// Ground-truth layout with slots sorted by (row, col).
std::vector<double> layout_target(const align::PromptSpec& spec);
/// 1 where a coordinate is supervised: every field of a filled slot, only the
/// presence field of an empty slot.
std::vector<double> layout_mask(const align::PromptSpec& spec);

template <typename Real>
Tensor<Real> layout_targets(const std::vector<align::PromptSpec>& specs);
template <typename Real>
Tensor<Real> layout_masks(const std::vector<align::PromptSpec>& specs);

/// Reads the objects back out of a layout: slots with presence >= 0.5,
/// row/col rounded, glyph by argmax.
align::PromptSpec decode_layout(std::span<const double> z, align::Style style);

struct TlgDims {
  std::size_t d = 16;
  std::size_t hidden = 128;
};

/// tlg.w1 [hidden x d], tlg.b1, tlg.w2 [24 x hidden], tlg.b2; fan-in uniform.
template <typename Real>
void init_tlg_params(ParamSet<Real>& params, Rng& rng, const TlgDims& dims);

/// Pre-squash mean g_TLG(t) = W2 relu(W1 t + b1) + b2, shape [N x 24].
template <typename Real>
Var tlg_mean(const Bound<Real>& p, Var t);

/// z = sigmoid(g_TLG(t) + sigma xi), xi ~ N(0, I), xi = 0 when deterministic.
/// The sigmoid keeps every coordinate inside [0, 1]. Rows of t must be
/// unit-norm within 1e-5.
template <typename Real>
Tensor<Real> tlg_forward(const ParamSet<Real>& params, const Tensor<Real>& t, Rng& rng, bool deterministic,
                         double sigma2);

/// Mean over the batch of sum(mask * (pred - target)^2) / 24.
template <typename Real>
Var tlg_loss(Tape<Real>& tape, Var predicted, const Tensor<Real>& target, const Tensor<Real>& mask);

}  // namespace vlad::guidance
