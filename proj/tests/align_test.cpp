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

#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vlad/align/encoder.hpp"
#include "vlad/align/prompt.hpp"
#include "vlad/core/adam.hpp"
#include "vlad/core/error.hpp"

namespace vlad::align {
namespace {

using testing::random_spec;

ParamSet<double> encoder(std::uint64_t seed, std::size_t d = 16) {
  ParamSet<double> p;
  Rng rng(seed);
  init_encoder_params(p, rng, {d, 64, 64});
  return p;
}

double similarity_loss(const std::vector<double>& s, std::size_t n, double tau) {
  Tape<double> tape;
  return tape.value(contrastive_from_similarity(tape, tape.constant(Tensor<double>({n, n}, s)), tau)).item();
}

TEST(TokenizeTest, SingleGlyphPrompt) {
  EXPECT_EQ(tokenize("SCENE plain ; GLYPH A AT 2 3"), (TokenIds{1, 3, 4, 8, 6, 9, 7, 16, 17, 2}));
}

TEST(TokenizeTest, RejectsEmptyPrompt) { EXPECT_THROW(tokenize(""), FormatError); }

TEST(TokenizeTest, RejectsUnknownWordAndWideCoordinate) {
  EXPECT_THROW(tokenize("SCENE plain ; GLYPH F AT 2 3"), FormatError);
  EXPECT_THROW(tokenize("SCENE plain ; GLYPH A AT 2 16"), FormatError);
  EXPECT_THROW(tokenize("SCENE plain"), FormatError);
  EXPECT_THROW(tokenize("SCENE plain ; GLYPH A AT 2"), FormatError);
}

TEST(TokenizeTest, RoundTripOverRandomPrompts) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const PromptSpec spec = random_spec(rng);
    const std::string text = emit_prompt(canonical(spec));
    ASSERT_EQ(detokenize(tokenize(emit_prompt(spec))), emit_prompt(spec));
    ASSERT_EQ(detokenize(tokenize(text)), text);
    ASSERT_EQ(canonical(parse_prompt(emit_prompt(spec))), canonical(spec));
  }
}

TEST(PromptTest, ValidationRejectsOverlapAndRange) {
  EXPECT_THROW(parse_prompt("SCENE plain ; GLYPH A AT 0 0 ; GLYPH B AT 4 4"), DomainError);
  EXPECT_NO_THROW(parse_prompt("SCENE plain ; GLYPH A AT 0 0 ; GLYPH B AT 5 0"));
  EXPECT_THROW(parse_prompt("SCENE plain ; GLYPH A AT 12 0"), DomainError);
  EXPECT_THROW(parse_prompt("SCENE plain ; GLYPH A AT 0 0 ; GLYPH A AT 0 5 ; GLYPH A AT 0 10 ; GLYPH A AT 6 0"),
               DomainError);
}

TEST(PromptTest, SplitClausesPadsGlobal) {
  const auto clauses = split_clauses(tokenize("SCENE invert ; GLYPH C AT 1 2 ; GLYPH E AT 9 9"));
  ASSERT_EQ(clauses.size(), 3u);
  EXPECT_EQ(clauses[0], (Clause{tok::kScene, tok::kInvert, tok::kPad, tok::kPad, tok::kPad}));
  EXPECT_EQ(clauses[2], (Clause{tok::kGlyph, tok::kGlyphBase + 4, tok::kAt, tok::kCoordBase + 9, tok::kCoordBase + 9}));
}

TEST(EncodeTextTest, OneLocalPerClauseAndDeterministic) {
  const auto p = encoder(1);
  const auto a = embed_prompt(p, tokenize("SCENE plain ; GLYPH A AT 2 3 ; GLYPH B AT 8 8"));
  const auto b = embed_prompt(p, tokenize("SCENE plain ; GLYPH A AT 2 3 ; GLYPH B AT 8 8"));
  EXPECT_EQ(a.t_locals.rows(), 2u);
  EXPECT_TRUE(bit_equal(a.t, b.t));
  EXPECT_TRUE(bit_equal(a.t_locals, b.t_locals));
}

TEST(EncodeTextTest, SwappingClausesPermutesLocals) {
  const auto p = encoder(2);
  const auto a = embed_prompt(p, tokenize("SCENE invert ; GLYPH A AT 2 3 ; GLYPH D AT 8 1"));
  const auto b = embed_prompt(p, tokenize("SCENE invert ; GLYPH D AT 8 1 ; GLYPH A AT 2 3"));
  EXPECT_TRUE(bit_equal(a.t_global, b.t_global));
  for (std::size_t j = 0; j < 16; ++j) {
    EXPECT_EQ(a.t_locals.at(0, j), b.t_locals.at(1, j));
    EXPECT_EQ(a.t_locals.at(1, j), b.t_locals.at(0, j));
  }
  EXPECT_LT(max_abs_diff(a.t, b.t), 1e-12);
}

TEST(EncodeTextTest, EmbeddingsAreUnitNorm) {
  const auto p = encoder(3);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto e = embed_prompt(p, tokenize(emit_prompt(random_spec(rng))));
    require_unit_rows(e.t_global, 1e-5, "t_g");
    require_unit_rows(e.t_locals, 1e-5, "t_i");
    require_unit_rows(e.t, 1e-5, "t");
  }
}

TEST(ComposeTest, NoLocalsGivesNormalizedGlobal) {
  const auto p = encoder(4);
  Tape<double> tape;
  Bound<double> b(tape, p);
  const Tensor<double> g = Tensor<double>({1, 16}, std::vector<double>(16, 3.0));
  Var t = compose_ccm(b, tape.constant(g), tape.constant(Tensor<double>({1, 16})), {0, 0});
  for (double v : tape.value(t).values()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(ComposeTest, SingleLocalGetsFullAttention) {
  const auto p = encoder(5);
  Rng rng(5);
  const auto w = ccm_attention(p, testing::unit_rows<double>(rng, 1, 16), testing::unit_rows<double>(rng, 1, 16), {0, 1});
  ASSERT_EQ(w.size(), 1u);
  ASSERT_EQ(w[0].size(), 1u);
  EXPECT_EQ(w[0][0], 1.0);
}

TEST(ComposeTest, MatchesDirectFormula) {
  const std::size_t d = 4;
  auto p = encoder(6, d);
  Rng rng(6);
  // Hand-set projections replace the learned ones.
  const char* names[] = {"ccm.q", "ccm.k", "ccm.v", "ccm.out"};
  std::vector<Tensor<double>> proj;
  for (const char* n : names) {
    proj.push_back(testing::uniform_tensor<double>(rng, {d, d}, -1, 1));
    p.set(n, proj.back());
  }
  const auto g = testing::uniform_tensor<double>(rng, {1, d}, -1, 1);
  const auto l = testing::uniform_tensor<double>(rng, {3, d}, -1, 1);

  auto normalize = [](std::vector<double> x) {
    double n = 0;
    for (double v : x) n += v * v;
    for (double& v : x) v /= std::sqrt(n);
    return x;
  };
  auto apply = [&](const Tensor<double>& w, const std::vector<double>& x) {
    std::vector<double> y(d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) y[r] += w.at(r, c) * x[c];
    return y;
  };
  const auto tg = normalize({g[0], g[1], g[2], g[3]});
  const auto q = apply(proj[0], tg);
  std::vector<std::vector<double>> ti;
  std::vector<double> scores;
  for (std::size_t i = 0; i < 3; ++i) {
    ti.push_back(normalize({l.at(i, 0), l.at(i, 1), l.at(i, 2), l.at(i, 3)}));
    const auto k = apply(proj[1], ti.back());
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) s += q[j] * k[j];
    scores.push_back(s / 2.0);
  }
  double z = 0;
  for (double s : scores) z += std::exp(s);
  std::vector<double> ctx(d, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto v = apply(proj[2], ti[i]);
    for (std::size_t j = 0; j < d; ++j) ctx[j] += std::exp(scores[i]) / z * v[j];
  }
  const auto out = apply(proj[3], ctx);
  std::vector<double> sum(d);
  for (std::size_t j = 0; j < d; ++j) sum[j] = tg[j] + out[j];
  const auto expect = normalize(sum);

  Tape<double> tape;
  Bound<double> b(tape, p);
  const auto& t = tape.value(compose_ccm(b, tape.constant(g), tape.constant(l), {0, 3}));
  for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(t[j], expect[j], 1e-12);
}

TEST(ComposeTest, InvariantToLocalOrderAndScale) {
  auto p = encoder(7);
  Rng rng(7);
  for (const char* n : {"ccm.q", "ccm.k", "ccm.v", "ccm.out"}) p.set(n, testing::uniform_tensor<double>(rng, {16, 16}, -0.5, 0.5));
  const auto g = testing::unit_rows<double>(rng, 1, 16);
  const auto l = testing::unit_rows<double>(rng, 3, 16);
  std::vector<double> permuted(l.values().begin(), l.values().end()), scaled = permuted;
  std::swap_ranges(permuted.begin(), permuted.begin() + 16, permuted.begin() + 32);
  for (std::size_t j = 16; j < 32; ++j) scaled[j] *= 7.5;
  auto run = [&](const Tensor<double>& locals) {
    Tape<double> tape;
    Bound<double> b(tape, p);
    return tape.value(compose_ccm(b, tape.constant(g), tape.constant(locals), {0, 3}));
  };
  const auto base = run(l);
  EXPECT_LT(max_abs_diff(base, run(Tensor<double>({3, 16}, permuted))), 1e-6);
  EXPECT_LT(max_abs_diff(base, run(Tensor<double>({3, 16}, scaled))), 1e-6);
}

TEST(EncodeImageTest, UnitNormDeterministicAndRangeChecked) {
  const auto p = encoder(8);
  Rng rng(8);
  const auto canvases = testing::uniform_tensor<double>(rng, {5, 256}, 0, 1);
  const auto v = embed_images(p, canvases);
  require_unit_rows(v, 1e-5, "v");
  EXPECT_TRUE(bit_equal(v, embed_images(p, canvases)));
  auto bad = canvases;
  bad.mutable_values()[3] = 1.5;
  EXPECT_THROW(embed_images(p, bad), DomainError);
}

TEST(EncodeImageTest, TrainingSeparatesBlankAndFullCanvases) {
  auto p = encoder(9).cast<float>();
  std::vector<float> px(512, 0.0f);
  std::fill(px.begin() + 256, px.end(), 1.0f);
  const Tensor<float> canvases({2, 256}, px);
  const std::vector<TokenIds> prompts = {tokenize("SCENE plain ; GLYPH A AT 0 0"), tokenize("SCENE invert ; GLYPH A AT 0 0")};
  AdamState<float> opt;
  for (int step = 0; step < 3; ++step) {
    Tape<float> tape;
    Bound<float> b(tape, p);
    TextBatch text = encode_text(b, prompts);
    Var t = compose_ccm(b, text.global, text.locals, text.offsets);
    Var loss = contrastive_loss(tape, t, encode_image(b, canvases), {0.07, 2});
    tape.backward(loss);
    std::vector<Tensor<float>*> params;
    for (std::size_t i = 0; i < p.size(); ++i) params.push_back(&p.value_mut(i));
    adam_step(opt, params, b.trainable_grads());
  }
  const auto v = embed_images(p, canvases);
  double cos = 0;
  for (std::size_t j = 0; j < v.cols(); ++j) cos += v.at(0, j) * v.at(1, j);
  EXPECT_LT(cos, 1.0 - 1e-4);
}

TEST(ContrastiveTest, UniformSimilarityGivesLogN) {
  Tape<double> tape;
  const Tensor<double> same = Tensor<double>({4, 2}, {1, 0, 1, 0, 1, 0, 1, 0});
  Var loss = contrastive_loss(tape, tape.constant(same), tape.constant(same), {0.07, 4});
  EXPECT_NEAR(tape.value(loss).item(), std::log(4.0), 1e-6);
}

TEST(ContrastiveTest, ClosedFormPairs) {
  Tape<double> tape;
  const auto eye = Tensor<double>::matrix({{1, 0}, {0, 1}});
  Var loss = contrastive_loss(tape, tape.constant(eye), tape.constant(eye), {1.0, 2});
  EXPECT_NEAR(tape.value(loss).item(), std::log(1 + std::exp(-1.0)), 1e-6);
  EXPECT_NEAR(tape.value(loss).item(), 0.313262, 1e-6);

  // Cyclic rows (1, 0.5, 0) share one row term, so the mean equals it.
  const double term = similarity_loss({1.0, 0.5, 0.0, 0.0, 1.0, 0.5, 0.5, 0.0, 1.0}, 3, 0.5);
  EXPECT_NEAR(term, std::log(1 + std::exp(-1.0) + std::exp(-2.0)), 1e-6);
}

TEST(ContrastiveTest, NonNegativeAndMonotoneInMatchedCosine) {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    std::vector<double> s(n * n);
    for (auto& x : s) x = 2 * rng.uniform() - 1;
    const double base = similarity_loss(s, n, 0.1);
    EXPECT_GE(base, 0.0);
    const std::size_t i = rng.below(n);
    s[i * n + i] -= 0.2;
    EXPECT_GT(similarity_loss(s, n, 0.1), base);
  }
}

TEST(ContrastiveTest, RejectsNonUnitRows) {
  Tape<double> tape;
  const auto t = Tensor<double>::matrix({{2, 0}, {0, 1}});
  EXPECT_THROW(contrastive_loss(tape, tape.constant(t), tape.constant(t), {0.07, 2}), DomainError);
}

}  // namespace
}  // namespace vlad::align
