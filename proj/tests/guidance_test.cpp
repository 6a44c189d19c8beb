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

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vlad/align/encoder.hpp"
#include "vlad/core/adam.hpp"
#include "vlad/core/error.hpp"
#include "vlad/guidance/denoiser.hpp"
#include "vlad/guidance/layout.hpp"
#include "vlad/guidance/lora.hpp"

namespace vlad::guidance {
namespace {

using Td = Tensor<double>;
using align::PromptSpec;
using align::Style;

ParamSet<double> tlg_params(std::uint64_t seed) {
  ParamSet<double> p;
  Rng rng(seed);
  init_tlg_params(p, rng, {16, 128});
  return p;
}

TEST(LayoutTest, TargetAndMaskForTwoObjects) {
  const PromptSpec spec{Style::kPlain, {{4, 11, 0}, {1, 0, 11}}};
  const auto z = layout_target(spec);
  const auto m = layout_mask(spec);
  ASSERT_EQ(z.size(), kLayoutDim);
  // Slot 0 holds the object at row 0.
  EXPECT_EQ(z[0], 1.0);
  EXPECT_EQ(z[1], 0.0);
  EXPECT_EQ(z[2], 1.0);
  EXPECT_EQ(z[3 + 1], 1.0);
  EXPECT_EQ(z[8 + 1], 1.0);
  EXPECT_EQ(z[8 + 3 + 4], 1.0);
  for (std::size_t j = 16; j < 24; ++j) EXPECT_EQ(z[j], 0.0);
  for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(m[j], 1.0);
  EXPECT_EQ(m[16], 1.0);
  for (std::size_t j = 17; j < 24; ++j) EXPECT_EQ(m[j], 0.0);
}

TEST(LayoutTest, DecodeRecoversCanonicalSpec) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const PromptSpec spec = testing::random_spec(rng);
    EXPECT_EQ(decode_layout(layout_target(spec), spec.style), align::canonical(spec));
  }
}

TEST(TlgTest, DeterministicIsSquashedMean) {
  const auto p = tlg_params(2);
  Rng rng(2);
  const Td t = testing::unit_rows<double>(rng, 5, 16);
  Tape<double> tape;
  Bound<double> b(tape, p);
  const Td mean = tape.value(tlg_mean(b, tape.constant(t)));
  const Td z = tlg_forward(p, t, rng, true, 0.01);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(z[i], 1.0 / (1.0 + std::exp(-mean[i])));
  for (double v : z.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(TlgTest, ZeroVarianceMatchesDeterministic) {
  const auto p = tlg_params(3);
  Rng rng(3);
  const Td t = testing::unit_rows<double>(rng, 4, 16);
  EXPECT_TRUE(bit_equal(tlg_forward(p, t, rng, false, 0.0), tlg_forward(p, t, rng, true, 0.0)));
}

TEST(TlgTest, PreSquashNoiseHasConfiguredVariance) {
  const auto p = tlg_params(4);
  Rng rng(4);
  const std::size_t n = 100000;
  const Td one = testing::unit_rows<double>(rng, 1, 16);
  std::vector<double> rows;
  for (std::size_t i = 0; i < n; ++i) rows.insert(rows.end(), one.values().begin(), one.values().end());
  const Td t({n, 16}, rows);
  const Td mean = tlg_forward(p, one, rng, true, 0.0);
  const Td z = tlg_forward(p, t, rng, false, 0.01);
  for (std::size_t j = 0; j < kLayoutDim; ++j) {
    const double mu = std::log(mean[j] / (1 - mean[j]));
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::log(z.at(i, j) / (1 - z.at(i, j))) - mu;
      acc += d * d;
    }
    EXPECT_NEAR(acc / static_cast<double>(n), 0.01, 0.0005) << "coordinate " << j;
  }
}

TEST(TlgTest, RejectsNonUnitInput) {
  const auto p = tlg_params(5);
  Rng rng(5);
  EXPECT_THROW(tlg_forward(p, Td::filled({1, 16}, 1.0), rng, true, 0.01), DomainError);
  EXPECT_THROW(tlg_forward(p, testing::unit_rows<double>(rng, 1, 8), rng, true, 0.01), DimensionError);
}

double tlg_loss_value(const Td& pred, const Td& target, const Td& mask) {
  Tape<double> tape;
  return tape.value(tlg_loss(tape, tape.constant(pred), target, mask)).item();
}

TEST(TlgLossTest, ExactAndSinglePresenceError) {
  const std::vector<PromptSpec> specs{{Style::kPlain, {{0, 3, 3}}}};
  const Td target = layout_targets<double>(specs);
  const Td mask = layout_masks<double>(specs);
  EXPECT_EQ(tlg_loss_value(target, target, mask), 0.0);
  auto off = target;
  off.mutable_values()[8] = 1.0;  // empty slot claims presence
  EXPECT_NEAR(tlg_loss_value(off, target, mask), 1.0 / 24.0, 1e-15);
}

TEST(TlgLossTest, MatchesLoopOracle) {
  Rng rng(6);
  std::vector<PromptSpec> specs;
  for (int i = 0; i < 7; ++i) specs.push_back(testing::random_spec(rng));
  const Td target = layout_targets<double>(specs);
  const Td mask = layout_masks<double>(specs);
  const Td pred = testing::uniform_tensor<double>(rng, {7, 24}, 0, 1);
  double oracle = 0;
  for (std::size_t i = 0; i < 7; ++i) {
    const auto t = layout_target(specs[i]);
    const auto m = layout_mask(specs[i]);
    for (std::size_t j = 0; j < 24; ++j) oracle += m[j] * std::pow(pred.at(i, j) - t[j], 2);
  }
  EXPECT_NEAR(tlg_loss_value(pred, target, mask), oracle / (7 * 24), 1e-6);
  EXPECT_THROW(tlg_loss_value(pred, layout_targets<double>({specs[0]}), mask), DimensionError);
}

struct DenoiserFixture : ::testing::Test {
  void SetUp() override {
    Rng rng(7);
    init_denoiser_params(params, rng, dims);
    schedule = diffusion::build_schedule(50, 1e-4, 0.02);
    xt = testing::uniform_tensor<double>(rng, {3, 256}, -1, 1);
    z = testing::uniform_tensor<double>(rng, {3, 24}, 0, 1);
    text = testing::unit_rows<double>(rng, 3, 16);
  }
  DenoiserDims dims;
  ParamSet<double> params;
  diffusion::NoiseSchedule schedule;
  Td xt, z, text;
};

TEST_F(DenoiserFixture, InputWidthAndDeterminism) {
  EXPECT_EQ(params.get("den.w1").cols(), 256u + 24u + 16u + 8u);
  EXPECT_TRUE(bit_equal(denoise(params, xt, z, text, 12, schedule), denoise(params, xt, z, text, 12, schedule)));
}

TEST_F(DenoiserFixture, LayoutConditioningIsLive) {
  Rng rng(8);
  const Td other = testing::uniform_tensor<double>(rng, {3, 24}, 0, 1);
  const Td a = denoise(params, xt, z, text, 12, schedule);
  const Td b = denoise(params, xt, other, text, 12, schedule);
  double norm = 0;
  for (std::size_t i = 0; i < a.size(); ++i) norm += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_GT(std::sqrt(norm), 0.0);
}

TEST_F(DenoiserFixture, ZeroAdaptersAreBitIdentical) {
  ParamSet<double> adapted = params;
  Rng rng(9);
  attach_lora(adapted, {"den.w1", "den.w2"}, 2, rng);
  EXPECT_TRUE(bit_equal(denoise(params, xt, z, text, 30, schedule), denoise(adapted, xt, z, text, 30, schedule)));
}

TEST(TimestepEmbeddingTest, SinCosPairs) {
  const auto e = timestep_embedding(7);
  for (int k = 0; k < 4; ++k) {
    const double f = std::pow(100.0, -k / 3.0);
    EXPECT_NEAR(e[static_cast<std::size_t>(k)], std::sin(7 * f), 1e-15);
    EXPECT_NEAR(e[static_cast<std::size_t>(k) + 4], std::cos(7 * f), 1e-15);
  }
}

TEST(SnrWeightTest, CappedAtOne) {
  const auto s = diffusion::build_schedule(50, 1e-4, 0.02);
  const auto w = snr_weights<double>({1, 50}, s);
  EXPECT_NEAR(w[0], (1 - s.alpha_bar_at(1)) / s.alpha_bar_at(1), 1e-15);
  EXPECT_EQ(w[1], std::min(1.0, (1 - s.alpha_bar_at(50)) / s.alpha_bar_at(50)));
}

Eigen::MatrixXd to_eigen(const Td& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t.at(i, j);
  return m;
}

TEST(LoraTest, ZeroFactorsLeaveBaseForward) {
  Rng rng(10);
  const Td w = testing::uniform_tensor<double>(rng, {5, 4}, -1, 1);
  const Td x = testing::uniform_tensor<double>(rng, {4, 3}, -1, 1);
  auto adapter = make_adapter(w, 2, "w", rng);
  EXPECT_TRUE(bit_equal(lora_apply(w, adapter, x), matmul(w, x)));
  adapter.a = Td({5, 2});
  adapter.b = testing::uniform_tensor<double>(rng, {4, 2}, -1, 1);
  EXPECT_TRUE(bit_equal(lora_apply(w, adapter, x), matmul(w, x)));
  EXPECT_TRUE(bit_equal(lora_merge(w, make_adapter(w, 2, "w", rng)), w));
}

TEST(LoraTest, MatchesExplicitMaterialization) {
  Rng rng(11);
  const std::size_t d = 4;
  const Td w = testing::uniform_tensor<double>(rng, {d, d}, -1, 1);
  LoraAdapter<double> adapter{Td({d, d}), testing::uniform_tensor<double>(rng, {d, d}, -1, 1), d, "w"};
  for (std::size_t i = 0; i < d; ++i) adapter.a.mutable_values()[i * d + i] = 1.0;
  const Td x = testing::uniform_tensor<double>(rng, {d}, -1, 1);
  const Eigen::MatrixXd explicit_w = to_eigen(w) + to_eigen(adapter.a) * to_eigen(adapter.b).transpose();
  const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.values().data(), d);
  const Eigen::VectorXd expect = explicit_w * xv;
  const Td out = lora_apply(w, adapter, x);
  for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(out[i], expect(i), 1e-12);
}

TEST(LoraTest, UpdateRankIsBounded) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Td a = testing::uniform_tensor<double>(rng, {4, 2}, -1, 1);
    const Td b = testing::uniform_tensor<double>(rng, {4, 2}, -1, 1);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(a) * to_eigen(b).transpose());
    const auto s = svd.singularValues();
    EXPECT_LT(s(2), 1e-6 * s(0));
    EXPECT_LT(s(3), 1e-6 * s(0));
  }
}

TEST(LoraTest, MergeMatchesApplyAndIsNotIdempotent) {
  Rng rng(13);
  const Td w = testing::uniform_tensor<double>(rng, {6, 5}, -1, 1);
  LoraAdapter<double> adapter{testing::uniform_tensor<double>(rng, {6, 2}, -1, 1),
                              testing::uniform_tensor<double>(rng, {5, 2}, -1, 1), 2, "w"};
  const Td x = testing::uniform_tensor<double>(rng, {5, 4}, -1, 1);
  const Td merged = lora_merge(w, adapter);
  EXPECT_LT(max_abs_diff(matmul(merged, x), lora_apply(w, adapter, x)), 1e-6);
  EXPECT_GT(max_abs_diff(lora_merge(merged, adapter), merged), 0.0);
  EXPECT_THROW(lora_apply(w, adapter, Td({4, 2})), DimensionError);
}

TEST(LoraTest, FrozenBaseStaysBitIdenticalDuringTraining) {
  ParamSet<float> p;
  Rng rng(14);
  p.add("w", fan_in_uniform<float>(rng, {3, 4}, 4));
  p.add("b", Tensor<float>({3}));
  attach_lora(p, {"w"}, 2, rng);
  const Tensor<float> base = p.get("w");
  const Tensor<float> a0 = p.get("w.lora_a"), b0 = p.get("w.lora_b");
  const Tensor<float> x = testing::uniform_tensor<float>(rng, {8, 4}, -1, 1);
  AdamState<float> opt;
  for (int step = 0; step < 25; ++step) {
    Tape<float> tape;
    Bound<float> bound(tape, p);
    Var y = linear(bound, tape.constant(x), "w", "b");
    Var loss = tape.mean(tape.mul(tape.add_scalar(y, -1.0), tape.add_scalar(y, -1.0)));
    tape.backward(loss);
    std::vector<Tensor<float>*> trainable;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p.trainable(i)) trainable.push_back(&p.value_mut(i));
    }
    adam_step(opt, trainable, bound.trainable_grads());
  }
  EXPECT_TRUE(bit_equal(p.get("w"), base));
  EXPECT_FALSE(bit_equal(p.get("w.lora_a"), a0));
  EXPECT_FALSE(bit_equal(p.get("w.lora_b"), b0));
  const auto adapter = adapter_of(p, "w");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(adapter.a.cast<double>()) * to_eigen(adapter.b.cast<double>()).transpose());
  EXPECT_LT(svd.singularValues()(2), 1e-6 * svd.singularValues()(0));
}

TEST(LoraTest, MergeAllFoldsAdapters) {
  ParamSet<double> p;
  Rng rng(15);
  p.add("w", testing::uniform_tensor<double>(rng, {3, 4}, -1, 1));
  attach_lora(p, {"w"}, 2, rng);
  p.set("w.lora_b", testing::uniform_tensor<double>(rng, {4, 2}, -1, 1));
  const auto merged = merge_all(p);
  EXPECT_EQ(merged.size(), 1u);
  EXPECT_TRUE(bit_equal(merged.get("w"), lora_merge(p.get("w"), adapter_of(p, "w"))));
}

}  // namespace
}  // namespace vlad::guidance
