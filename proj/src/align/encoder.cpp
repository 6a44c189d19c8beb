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

#include "vlad/align/encoder.hpp"

#include <cmath>
#include <string>

#include "vlad/core/error.hpp"

namespace vlad::align {

template <typename Real>
void init_encoder_params(ParamSet<Real>& params, Rng& rng, const EncoderDims& dims) {
  const std::size_t d = dims.d, th = dims.text_hidden, ih = dims.image_hidden;
  params.add("text.embed", normal_init<Real>(rng, {tok::kVocabSize, d}, std::pow(static_cast<double>(d), -0.25)));
  params.add("text.pool.w", fan_in_uniform<Real>(rng, {d, 5 * d}, 5 * d));
  params.add("text.pool.b", fan_in_uniform<Real>(rng, {d}, 5 * d));
  params.add("text.w1", fan_in_uniform<Real>(rng, {th, d}, d));
  params.add("text.b1", fan_in_uniform<Real>(rng, {th}, d));
  params.add("text.w2", fan_in_uniform<Real>(rng, {d, th}, th));
  params.add("text.b2", fan_in_uniform<Real>(rng, {d}, th));
  for (const char* name : {"ccm.q", "ccm.k", "ccm.v", "ccm.out"}) params.add(name, normal_init<Real>(rng, {d, d}, 0.02));
  params.add("image.w1", fan_in_uniform<Real>(rng, {ih, kCanvasPixels}, kCanvasPixels));
  params.add("image.b1", fan_in_uniform<Real>(rng, {ih}, kCanvasPixels));
  params.add("image.w2", fan_in_uniform<Real>(rng, {d, ih}, ih));
  params.add("image.b2", fan_in_uniform<Real>(rng, {d}, ih));
}

template <typename Real>
TextBatch encode_text(const Bound<Real>& p, const std::vector<TokenIds>& prompts) {
  if (prompts.empty()) throw DimensionError("encode_text: empty batch");
  Tape<Real>& tape = p.tape();
  const std::size_t d = tape.value(p("text.embed")).cols();

  // Global clauses first (one per prompt), then all local clauses in order.
  std::vector<std::vector<Clause>> split;
  std::vector<std::size_t> ids;
  TextBatch out;
  out.offsets.push_back(0);
  for (const TokenIds& prompt : prompts) {
    split.push_back(split_clauses(prompt));
    if (split.back().size() < 2) throw FormatError("encode_text: prompt has no GLYPH clause");
    out.offsets.push_back(out.offsets.back() + split.back().size() - 1);
    ids.insert(ids.end(), split.back()[0].begin(), split.back()[0].end());
  }
  for (const auto& clauses : split) {
    for (std::size_t c = 1; c < clauses.size(); ++c) ids.insert(ids.end(), clauses[c].begin(), clauses[c].end());
  }
  const std::size_t total = ids.size() / 5;
  Var tokens = tape.gather_rows(p("text.embed"), ids);
  Var flat = tape.reshape(tokens, {total, 5 * d});
  Var pooled = linear(p, flat, "text.pool.w", "text.pool.b");
  Var hidden = tape.tanh(linear(p, pooled, "text.w1", "text.b1"));
  Var emb = tape.normalize_rows(linear(p, hidden, "text.w2", "text.b2"));
  out.global = tape.slice(emb, 0, 0, prompts.size());
  out.locals = tape.slice(emb, 0, prompts.size(), total - prompts.size());
  return out;
}

template <typename Real>
Var compose_ccm(const Bound<Real>& p, Var global, Var locals, const std::vector<std::size_t>& offsets) {
  Tape<Real>& tape = p.tape();
  const Tensor<Real>& g = tape.value(global);
  const std::size_t n = g.rows(), d = g.cols();
  if (offsets.size() != n + 1 || offsets.front() != 0) {
    throw DimensionError("compose_ccm: offsets do not describe " + std::to_string(n) + " prompts");
  }
  if (tape.value(p("ccm.q")).rows() != d) {
    throw DimensionError("compose_ccm: embedding width " + std::to_string(d) + " does not match projections " +
                         shape_string(tape.value(p("ccm.q")).shape()));
  }
  Var tg = tape.normalize_rows(global);
  if (offsets.back() == 0) return tg;
  const Tensor<Real>& l = tape.value(locals);
  if (l.rank() != 2 || l.cols() != d || l.rows() != offsets.back()) {
    throw DimensionError("compose_ccm: locals " + shape_string(l.shape()) + " for width " + std::to_string(d));
  }
  Var tl = tape.normalize_rows(locals);
  Var q = tape.matmul_nt(tg, p("ccm.q"));
  Var k = tape.matmul_nt(tl, p("ccm.k"));
  Var v = tape.matmul_nt(tl, p("ccm.v"));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Var> rows;
  rows.reserve(n);
  Var zero_row = tape.constant(Tensor<Real>({1, d}));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = offsets[i + 1] - offsets[i];
    if (m == 0) {
      rows.push_back(zero_row);
      continue;
    }
    Var qi = tape.slice(q, 0, i, 1);
    Var scores = tape.scale(tape.matmul_nt(qi, tape.slice(k, 0, offsets[i], m)), inv_sqrt_d);
    Var weights = tape.softmax_rows(scores);
    rows.push_back(tape.matmul(weights, tape.slice(v, 0, offsets[i], m)));
  }
  Var context = tape.matmul_nt(tape.concat(rows, 0), p("ccm.out"));
  return tape.normalize_rows(tape.add(tg, context));
}

template <typename Real>
std::vector<std::vector<Real>> ccm_attention(const ParamSet<Real>& params, const Tensor<Real>& global,
                                             const Tensor<Real>& locals, const std::vector<std::size_t>& offsets) {
  Tape<Real> tape;
  Bound<Real> p(tape, params);
  Var tg = tape.normalize_rows(tape.constant(global));
  Var tl = tape.normalize_rows(tape.constant(locals));
  Var q = tape.matmul_nt(tg, p("ccm.q"));
  Var k = tape.matmul_nt(tl, p("ccm.k"));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(global.cols()));
  std::vector<std::vector<Real>> out;
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    const std::size_t m = offsets[i + 1] - offsets[i];
    if (m == 0) {
      out.emplace_back();
      continue;
    }
    Var s = tape.scale(tape.matmul_nt(tape.slice(q, 0, i, 1), tape.slice(k, 0, offsets[i], m)), inv_sqrt_d);
    auto w = tape.value(tape.softmax_rows(s)).values();
    out.emplace_back(w.begin(), w.end());
  }
  return out;
}

template <typename Real>
Var encode_image(const Bound<Real>& p, const Tensor<Real>& canvases) {
  if (canvases.rank() != 2 || canvases.cols() != kCanvasPixels) {
    throw DimensionError("encode_image: expected [N x 256] canvases, got " + shape_string(canvases.shape()));
  }
  for (Real v : canvases.values()) {
    if (!(v >= Real(0) && v <= Real(1))) throw DomainError("encode_image: pixel value outside [0, 1]");
  }
  Tape<Real>& tape = p.tape();
  Var x = tape.constant(canvases);
  Var hidden = tape.tanh(linear(p, x, "image.w1", "image.b1"));
  return tape.normalize_rows(linear(p, hidden, "image.w2", "image.b2"));
}

template <typename Real>
void require_unit_rows(const Tensor<Real>& rows, double tol, const char* what) {
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    double sq = 0;
    for (std::size_t j = 0; j < rows.cols(); ++j) sq += static_cast<double>(rows.at(i, j)) * rows.at(i, j);
    if (std::abs(std::sqrt(sq) - 1.0) > tol) {
      throw DomainError(std::string(what) + ": row " + std::to_string(i) + " has norm " + std::to_string(std::sqrt(sq)));
    }
  }
}

template <typename Real>
Var contrastive_from_similarity(Tape<Real>& tape, Var similarity, double tau) {
  if (!(tau > 0)) throw DomainError("contrastive loss needs tau > 0");
  const Tensor<Real>& s = tape.value(similarity);
  if (s.rank() != 2 || s.rows() != s.cols()) {
    throw DimensionError("contrastive loss needs a square similarity matrix, got " + shape_string(s.shape()));
  }
  const std::size_t n = s.rows();
  if (n < 2) throw DimensionError("contrastive loss needs a batch of at least 2");
  Tensor<Real> eye({n, n});
  for (std::size_t i = 0; i < n; ++i) eye.mutable_values()[i * n + i] = Real(1);
  Var log_p = tape.log_softmax_rows(tape.scale(similarity, 1.0 / tau));
  Var matched = tape.sum(tape.mul(log_p, tape.constant(eye)));
  return tape.scale(matched, -1.0 / static_cast<double>(n));
}

template <typename Real>
Var contrastive_loss(Tape<Real>& tape, Var t, Var v, const AlignConfig& cfg) {
  const Tensor<Real>& a = tape.value(t);
  const Tensor<Real>& b = tape.value(v);
  if (a.rank() != 2 || a.shape() != b.shape()) {
    throw DimensionError("contrastive loss: text " + shape_string(a.shape()) + " vs image " + shape_string(b.shape()));
  }
  if (a.rows() < 2) throw DimensionError("contrastive loss needs a batch of at least 2");
  require_unit_rows(a, 1e-5, "contrastive loss text embedding");
  require_unit_rows(b, 1e-5, "contrastive loss image embedding");
  return contrastive_from_similarity(tape, tape.matmul_nt(t, v), cfg.tau);
}

template <typename Real>
EmbeddingSet<Real> embed_prompt(const ParamSet<Real>& params, const TokenIds& prompt) {
  Tape<Real> tape;
  Bound<Real> p(tape, params);
  TextBatch text = encode_text(p, {prompt});
  Var t = compose_ccm(p, text.global, text.locals, text.offsets);
  return {tape.value(text.global), tape.value(text.locals), tape.value(t)};
}

template <typename Real>
Tensor<Real> embed_prompts(const ParamSet<Real>& params, const std::vector<TokenIds>& prompts, bool use_ccm) {
  Tape<Real> tape;
  Bound<Real> p(tape, params);
  TextBatch text = encode_text(p, prompts);
  Var t = use_ccm ? compose_ccm(p, text.global, text.locals, text.offsets) : tape.normalize_rows(text.global);
  return tape.value(t);
}

template <typename Real>
Tensor<Real> embed_images(const ParamSet<Real>& params, const Tensor<Real>& canvases) {
  Tape<Real> tape;
  Bound<Real> p(tape, params);
  return tape.value(encode_image(p, canvases));
}

#define VLAD_INSTANTIATE(Real)                                                                                 \
  template void init_encoder_params(ParamSet<Real>&, Rng&, const EncoderDims&);                               \
  template TextBatch encode_text(const Bound<Real>&, const std::vector<TokenIds>&);                           \
  template Var compose_ccm(const Bound<Real>&, Var, Var, const std::vector<std::size_t>&);                    \
  template std::vector<std::vector<Real>> ccm_attention(const ParamSet<Real>&, const Tensor<Real>&,           \
                                                        const Tensor<Real>&, const std::vector<std::size_t>&); \
  template Var encode_image(const Bound<Real>&, const Tensor<Real>&);                                          \
  template Var contrastive_from_similarity(Tape<Real>&, Var, double);                                          \
  template Var contrastive_loss(Tape<Real>&, Var, Var, const AlignConfig&);                                    \
  template EmbeddingSet<Real> embed_prompt(const ParamSet<Real>&, const TokenIds&);                           \
  template Tensor<Real> embed_prompts(const ParamSet<Real>&, const std::vector<TokenIds>&, bool);              \
  template Tensor<Real> embed_images(const ParamSet<Real>&, const Tensor<Real>&);                              \
  template void require_unit_rows(const Tensor<Real>&, double, const char*);

VLAD_INSTANTIATE(float)
VLAD_INSTANTIATE(double)

#undef VLAD_INSTANTIATE

}  // namespace vlad::align
