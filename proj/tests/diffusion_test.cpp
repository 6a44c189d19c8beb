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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vlad/core/error.hpp"
#include "vlad/diffusion/schedule.hpp"

namespace vlad::diffusion {
namespace {

using Td = Tensor<double>;

struct Moments {
  double mean = 0;
  double std = 0;
};

Moments moments_of(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / (n - 1))};
}

TEST(ScheduleTest, SingleStepUsesBetaStart) {
  const auto s = build_schedule(1, 1e-4, 0.02);
  ASSERT_EQ(s.beta.size(), 1u);
  EXPECT_EQ(s.beta[0], 1e-4);
}

TEST(ScheduleTest, EndpointsAreExact) {
  const auto s = build_schedule(1000, 1e-4, 0.02);
  EXPECT_EQ(s.beta_at(1), 1e-4);
  EXPECT_EQ(s.beta_at(1000), 0.02);
}

TEST(ScheduleTest, ConstantBetaProducts) {
  const auto s = build_schedule(2, 0.1, 0.1);
  EXPECT_NEAR(s.alpha_bar_at(1), 0.9, 1e-15);
  EXPECT_NEAR(s.alpha_bar_at(2), 0.81, 1e-15);
  EXPECT_EQ(s.alpha_bar_at(0), 1.0);
}

TEST(ScheduleTest, Invariants) {
  for (int steps : {1, 2, 50, 1000}) {
    const auto s = build_schedule(steps, 1e-4, 0.02);
    for (int t = 1; t <= steps; ++t) {
      EXPECT_EQ(s.alpha_at(t) + s.beta_at(t), 1.0);
      EXPECT_GT(s.beta_at(t), 0.0);
      EXPECT_LT(s.beta_at(t), 1.0);
      EXPECT_LT(s.alpha_bar_at(t), s.alpha_bar_at(t - 1));
      if (t > 1) EXPECT_GE(s.beta_at(t), s.beta_at(t - 1));
    }
  }
  EXPECT_THROW(build_schedule(0, 1e-4, 0.02), ConfigError);
  EXPECT_THROW(build_schedule(10, 0.02, 1e-4), ConfigError);
  EXPECT_THROW(build_schedule(10, 0.0, 0.02), ConfigError);
}

TEST(ForwardTest, ZeroNoiseScalesClean) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  const Td x0 = Td::vector({0.5, -1.0, 0.25});
  const auto out = forward_diffuse_with(x0, 30, s, Td({3}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out.xt[i], std::sqrt(s.alpha_bar_at(30)) * x0[i]);
}

TEST(ForwardTest, TimestepZeroLeavesInputUnchanged) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  Rng rng(1);
  const Td x0 = Td::vector({0.5, -1.0, 0.25});
  EXPECT_TRUE(bit_equal(forward_diffuse(x0, 0, s, rng).xt, x0));
}

TEST(ForwardTest, ConstructionIdentityAndErrors) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  Rng rng(2);
  const Td x0 = testing::uniform_tensor<double>(rng, {4, 8}, -1, 1);
  const auto sample = forward_diffuse(x0, 17, s, rng);
  const double a = std::sqrt(s.alpha_bar_at(17)), b = std::sqrt(1 - s.alpha_bar_at(17));
  for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_EQ(sample.xt[i], a * x0[i] + b * sample.eps[i]);
  EXPECT_THROW(forward_diffuse(x0, 51, s, rng), DomainError);
  EXPECT_THROW(forward_diffuse(Td::vector({1.5}), 3, s, rng), DomainError);
}

TEST(ForwardTest, EmpiricalStdMatchesClosedForm) {
  const auto s = build_schedule(2, 0.1, 0.1);
  Rng rng(3);
  const auto sample = forward_diffuse(Td({100000}), 2, s, rng);
  EXPECT_NEAR(moments_of(sample.xt.values()).std, std::sqrt(0.19), 0.01 * std::sqrt(0.19));
}

TEST(ForwardTest, MarginalClosureOneShotAndStepwise) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  const Td x0 = Td::filled({100000}, 0.8);
  for (int t : {1, 25, 50}) {
    const double mean = std::sqrt(s.alpha_bar_at(t)) * 0.8, std = std::sqrt(1 - s.alpha_bar_at(t));
    Rng rng(100 + static_cast<std::uint64_t>(t));
    const auto one = moments_of(forward_diffuse(x0, t, s, rng).xt.values());
    EXPECT_NEAR(one.mean, mean, 0.015 * mean);
    EXPECT_NEAR(one.std, std, 0.015 * std);
    Td x = x0;
    for (int k = 1; k <= t; ++k) x = forward_step(x, k, s, rng);
    const auto chained = moments_of(x.values());
    EXPECT_NEAR(chained.mean, mean, 0.015 * mean);
    EXPECT_NEAR(chained.std, std, 0.015 * std);
  }
}

TEST(ReverseStepTest, ZeroNoiseDividesBySqrtAlpha) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  const auto step = mu_from_eps(Td::vector({0.3, -0.6}), Td({2}), 20, s);
  EXPECT_NEAR(step.mu[0], 0.3 / std::sqrt(s.alpha_at(20)), 1e-15);
  EXPECT_NEAR(step.mu[1], -0.6 / std::sqrt(s.alpha_at(20)), 1e-15);
  EXPECT_EQ(step.sigma2, s.beta_at(20));
}

TEST(ReverseStepTest, TrueNoiseRecoversCleanAtFirstStep) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  Rng rng(4);
  const Td x0 = testing::uniform_tensor<double>(rng, {64}, -1, 1);
  const auto sample = forward_diffuse(x0, 1, s, rng);
  EXPECT_LT(max_abs_diff(mu_from_eps(sample.xt, sample.eps, 1, s).mu, x0), 1e-5);
}

TEST(ReverseStepTest, HandComputedScalar) {
  const auto s = build_schedule(2, 0.1, 0.1);
  const double mu = mu_from_eps(Td::vector({1.0}), Td::vector({1.0}), 2, s).mu[0];
  EXPECT_NEAR(mu, (1 - 0.1 / std::sqrt(0.19)) / std::sqrt(0.9), 1e-12);
  EXPECT_NEAR(mu, 0.81225, 2e-5);
}

TEST(ReverseStepTest, PosteriorVariance) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  EXPECT_EQ(reverse_variance(s, 1, ReverseVariance::kPosterior), 0.0);
  const double expect = (1 - s.alpha_bar_at(9)) / (1 - s.alpha_bar_at(10)) * s.beta_at(10);
  EXPECT_NEAR(reverse_variance(s, 10, ReverseVariance::kPosterior), expect, 1e-15);
}

std::vector<DiffusionSample<double>> random_batch(Rng& rng, std::size_t n, const NoiseSchedule& s) {
  std::vector<DiffusionSample<double>> batch;
  for (std::size_t i = 0; i < n; ++i) {
    batch.push_back(forward_diffuse(testing::uniform_tensor<double>(rng, {6}, -1, 1), 1 + static_cast<int>(rng.below(50)), s, rng));
  }
  return batch;
}

TEST(DiffusionLossTest, ExactAndOffsetCases) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  Rng rng(5);
  const auto batch = random_batch(rng, 4, s);
  std::vector<Td> exact, shifted;
  for (const auto& b : batch) {
    exact.push_back(b.eps);
    std::vector<double> v(b.eps.values().begin(), b.eps.values().end());
    for (double& x : v) x += 1;
    shifted.emplace_back(b.eps.shape(), v);
  }
  EXPECT_EQ(diffusion_loss(batch, exact), 0.0);
  EXPECT_NEAR(diffusion_loss(batch, shifted), 1.0, 1e-12);
}

TEST(DiffusionLossTest, MatchesLoopOracleAndPermutation) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  Rng rng(6);
  auto batch = random_batch(rng, 5, s);
  std::vector<Td> hat;
  for (std::size_t i = 0; i < batch.size(); ++i) hat.push_back(testing::uniform_tensor<double>(rng, {6}, -2, 2));
  double oracle = 0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t j = 0; j < 6; ++j) oracle += std::pow(batch[i].eps[j] - hat[i][j], 2);
  oracle /= 30.0;
  const double loss = diffusion_loss(batch, hat);
  EXPECT_NEAR(loss, oracle, 1e-12);

  std::vector<double> e, h;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    e.insert(e.end(), batch[i].eps.values().begin(), batch[i].eps.values().end());
    h.insert(h.end(), hat[i].values().begin(), hat[i].values().end());
  }
  Tape<double> tape;
  EXPECT_NEAR(tape.value(diffusion_loss(tape, tape.constant(Td({5, 6}, e)), tape.constant(Td({5, 6}, h)))).item(),
              oracle, 1e-12);

  std::reverse(batch.begin(), batch.end());
  std::reverse(hat.begin(), hat.end());
  EXPECT_NEAR(diffusion_loss(batch, hat), loss, 1e-12);
}

TEST(ReverseSampleTest, DeterministicRunsAreBitIdentical) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  Denoiser<float> den = [](const Tensor<float>& x, int t) {
    std::vector<float> v(x.values().begin(), x.values().end());
    for (float& e : v) e = 0.1f * e + 0.001f * static_cast<float>(t);
    return Tensor<float>(x.shape(), v);
  };
  for (bool deterministic : {true, false}) {
    const auto a = reverse_sample(den, 3, 256, s, Rng(7), {deterministic, ReverseVariance::kBeta, 0});
    const auto b = reverse_sample(den, 3, 256, s, Rng(7), {deterministic, ReverseVariance::kBeta, 0});
    EXPECT_TRUE(bit_equal(a, b));
  }
}

TEST(ReverseSampleTest, ZeroDenoiserUnrollsToScaledStart) {
  const auto s = build_schedule(50, 1e-4, 0.02);
  Denoiser<double> zero = [](const Td& x, int) { return Td(x.shape()); };
  const std::size_t rows = 4;
  const auto out = reverse_sample(zero, rows, 256, s, Rng(8), {true, ReverseVariance::kBeta, 0});
  double gain = 1;
  for (int t = 1; t <= 50; ++t) gain /= std::sqrt(s.alpha_at(t));
  for (std::size_t i = 0; i < rows; ++i) {
    Rng stream = Rng(8).split(i);
    for (std::size_t j = 0; j < 256; ++j) {
      const double x = std::clamp(stream.gaussian() * gain, -1.0, 1.0);
      ASSERT_NEAR(out.at(i, j), (x + 1) / 2, 1e-12);
    }
  }
}

TEST(ReverseSampleTest, ChunksReproduceFullBatch) {
  const auto s = build_schedule(20, 1e-4, 0.02);
  Denoiser<float> den = [](const Tensor<float>& x, int) {
    std::vector<float> v(x.values().begin(), x.values().end());
    for (float& e : v) e *= 0.5f;
    return Tensor<float>(x.shape(), v);
  };
  const auto full = reverse_sample(den, 6, 16, s, Rng(9), {false, ReverseVariance::kBeta, 0});
  const auto tail = reverse_sample(den, 2, 16, s, Rng(9), {false, ReverseVariance::kBeta, 4});
  for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(full[4 * 16 + j], tail[j]);
}

}  // namespace
}  // namespace vlad::diffusion
