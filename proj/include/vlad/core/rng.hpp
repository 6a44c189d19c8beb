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

#include "vlad/core/tensor.hpp"

namespace vlad {

/// Seeded pseudo-random source.
///
/// Algorithm: xoshiro256** (Blackman and Vigna, 2018). The 256-bit state is
/// filled from the 64-bit seed with SplitMix64. Gaussians use the Box-Muller
/// transform; the second value of each pair is cached and returned by the
/// next call. Both choices are frozen: changing them changes every artifact.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, n). Rejection-sampled, no modulo bias.
  std::uint64_t below(std::uint64_t n);
  double gaussian() noexcept;

  /// Independent child stream derived from this stream's seed and a key.
  /// Does not advance this stream.
  Rng split(std::uint64_t key) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, also used for seed derivation.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// I.i.d. standard normal tensor.
template <typename Real>
Tensor<Real> gauss_sample(Rng& rng, const Shape& shape);

}  // namespace vlad
