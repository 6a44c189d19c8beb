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

namespace vlad::align {

struct EncoderDims {
  std::size_t d = 16;
  std::size_t text_hidden = 64;
  std::size_t image_hidden = 64;
};

struct AlignConfig {
  double tau = 0.07;
  std::size_t batch_size = 32;
};

inline constexpr std::size_t kCanvasPixels = 256;

/// Adds text.*, ccm.* and image.* parameters.
/// Token table ~ N(0, 1/sqrt(d)) (variance), CCM projections ~ N(0, 0.02^2),
/// perceptron layers fan-in uniform.
template <typename Real>
void init_encoder_params(ParamSet<Real>& params, Rng& rng, const EncoderDims& dims);

/// Output of encode_text for a batch of prompts. Local embeddings of prompt
/// i occupy rows [offsets[i], offsets[i+1]) of `locals`.
struct TextBatch {
  Var global;
  Var locals;
  std::vector<std::size_t> offsets;
  std::size_t batch() const { return offsets.size() - 1; }
  std::size_t count(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
};

/// Clause embeddings: each clause's five tokens are looked up, flattened,
/// pooled by a linear map, passed through a tanh perceptron and normalized.
/// Throws FormatError for a prompt without GLYPH clauses.
template <typename Real>
TextBatch encode_text(const Bound<Real>& p, const std::vector<TokenIds>& prompts);

/// t = normalize(t_g + P_out sum_i a_i P_v t_i), a = softmax_i((P_q t_g).(P_k t_i)/sqrt(d)).
/// Inputs are renormalized first. Prompts with no locals yield normalize(t_g).
template <typename Real>
Var compose_ccm(const Bound<Real>& p, Var global, Var locals, const std::vector<std::size_t>& offsets);

/// Row-wise attention weights used by compose_ccm (for inspection and tests).
template <typename Real>
std::vector<std::vector<Real>> ccm_attention(const ParamSet<Real>& params, const Tensor<Real>& global,
                                             const Tensor<Real>& locals, const std::vector<std::size_t>& offsets);

/// canvases [N x 256] in [0, 1] -> unit-norm v [N x d]. Throws DomainError
/// for pixels outside [0, 1].
template <typename Real>
Var encode_image(const Bound<Real>& p, const Tensor<Real>& canvases);

/// Mean over rows of -log softmax_j(S_ij / tau)[i] for a similarity matrix S.
template <typename Real>
Var contrastive_from_similarity(Tape<Real>& tape, Var similarity, double tau);

/// InfoNCE over matched pairs (t_i, v_i). Both inputs must be unit-norm rows
/// (within 1e-5); N >= 2.
template <typename Real>
Var contrastive_loss(Tape<Real>& tape, Var t, Var v, const AlignConfig& cfg);

/// Plain (non-training) embeddings of one prompt.
template <typename Real>
struct EmbeddingSet {
  Tensor<Real> t_global;
  Tensor<Real> t_locals;  // [M x d]
  Tensor<Real> t;
};

template <typename Real>
EmbeddingSet<Real> embed_prompt(const ParamSet<Real>& params, const TokenIds& prompt);

/// Composed embeddings [N x d] for many prompts; use_ccm = false gives
/// normalize(t_g) (the "without CCM" variant).
template <typename Real>
Tensor<Real> embed_prompts(const ParamSet<Real>& params, const std::vector<TokenIds>& prompts, bool use_ccm);
template <typename Real>
Tensor<Real> embed_images(const ParamSet<Real>& params, const Tensor<Real>& canvases);

/// Throws DomainError when a row's L2 norm is not 1 within tol.
template <typename Real>
void require_unit_rows(const Tensor<Real>& rows, double tol, const char* what);

}  // namespace vlad::align
