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

#include "vlad/guidance/layout.hpp"

#include <algorithm>
#include <cmath>

#include "vlad/align/encoder.hpp"
#include "vlad/core/error.hpp"

namespace vlad::guidance {

std::vector<double> layout_target(const align::PromptSpec& spec) {
  std::vector<double> z(kLayoutDim, 0.0);
  const align::PromptSpec sorted = align::canonical(spec);
  for (std::size_t s = 0; s < sorted.objects.size() && s < kSlots; ++s) {
    const auto& o = sorted.objects[s];
    double* slot = z.data() + s * kSlotWidth;
    slot[0] = 1.0;
    slot[1] = o.row / static_cast<double>(align::kMaxOrigin);
    slot[2] = o.col / static_cast<double>(align::kMaxOrigin);
    slot[3 + o.glyph] = 1.0;
  }
  return z;
}

std::vector<double> layout_mask(const align::PromptSpec& spec) {
  std::vector<double> m(kLayoutDim, 0.0);
  for (std::size_t s = 0; s < kSlots; ++s) {
    if (s < spec.objects.size()) {
      std::fill_n(m.begin() + static_cast<std::ptrdiff_t>(s * kSlotWidth), kSlotWidth, 1.0);
    } else {
      m[s * kSlotWidth] = 1.0;
    }
  }
  return m;
}

namespace {

template <typename Real>
Tensor<Real> stack(const std::vector<align::PromptSpec>& specs,
                   std::vector<double> (*row)(const align::PromptSpec&)) {
  if (specs.empty()) throw DimensionError("layout batch is empty");
  std::vector<Real> out;
  out.reserve(specs.size() * kLayoutDim);
  for (const auto& spec : specs) {
    for (double v : row(spec)) out.push_back(static_cast<Real>(v));
  }
  return Tensor<Real>({specs.size(), kLayoutDim}, std::move(out));
}

}  // namespace

template <typename Real>
Tensor<Real> layout_targets(const std::vector<align::PromptSpec>& specs) {
  return stack<Real>(specs, &layout_target);
}

template <typename Real>
Tensor<Real> layout_masks(const std::vector<align::PromptSpec>& specs) {
  return stack<Real>(specs, &layout_mask);
}

align::PromptSpec decode_layout(std::span<const double> z, align::Style style) {
  if (z.size() != kLayoutDim) throw DimensionError("decode_layout needs 24 values");
  align::PromptSpec spec;
  spec.style = style;
  for (std::size_t s = 0; s < kSlots; ++s) {
    const double* slot = z.data() + s * kSlotWidth;
    if (slot[0] < 0.5) continue;
    const int glyph = static_cast<int>(std::max_element(slot + 3, slot + kSlotWidth) - (slot + 3));
    const int row = std::clamp(static_cast<int>(std::lround(slot[1] * align::kMaxOrigin)), 0, align::kMaxOrigin);
    const int col = std::clamp(static_cast<int>(std::lround(slot[2] * align::kMaxOrigin)), 0, align::kMaxOrigin);
    spec.objects.push_back({glyph, row, col});
  }
  return spec;
}

template <typename Real>
void init_tlg_params(ParamSet<Real>& params, Rng& rng, const TlgDims& dims) {
  params.add("tlg.w1", fan_in_uniform<Real>(rng, {dims.hidden, dims.d}, dims.d));
  params.add("tlg.b1", fan_in_uniform<Real>(rng, {dims.hidden}, dims.d));
  params.add("tlg.w2", fan_in_uniform<Real>(rng, {kLayoutDim, dims.hidden}, dims.hidden));
  params.add("tlg.b2", fan_in_uniform<Real>(rng, {kLayoutDim}, dims.hidden));
}

template <typename Real>
Var tlg_mean(const Bound<Real>& p, Var t) {
  Tape<Real>& tape = p.tape();
  const std::size_t d = tape.value(p("tlg.w1")).cols();
  if (tape.value(t).rank() != 2 || tape.value(t).cols() != d) {
    throw DimensionError("tlg: text embedding " + shape_string(tape.value(t).shape()) + " for width " +
                         std::to_string(d));
  }
  Var hidden = tape.relu(linear(p, t, "tlg.w1", "tlg.b1"));
  return linear(p, hidden, "tlg.w2", "tlg.b2");
}

template <typename Real>
Tensor<Real> tlg_forward(const ParamSet<Real>& params, const Tensor<Real>& t, Rng& rng, bool deterministic,
                         double sigma2) {
  if (!(sigma2 >= 0)) throw DomainError("tlg sigma^2 must be non-negative");
  align::require_unit_rows(t, 1e-5, "tlg_forward text embedding");
  Tape<Real> tape;
  Bound<Real> p(tape, params);
  Tensor<Real> mean = tape.value(tlg_mean(p, tape.constant(t)));
  Tensor<Real> z = mean;
  auto v = z.mutable_values();
  const double sigma = std::sqrt(sigma2);
  for (Real& x : v) {
    double pre = static_cast<double>(x);
    if (!deterministic) pre += sigma * rng.gaussian();
    x = static_cast<Real>(std::clamp(1.0 / (1.0 + std::exp(-pre)), 0.0, 1.0));
  }
  return z;
}

template <typename Real>
Var tlg_loss(Tape<Real>& tape, Var predicted, const Tensor<Real>& target, const Tensor<Real>& mask) {
  const Tensor<Real>& p = tape.value(predicted);
  if (p.shape() != target.shape() || p.shape() != mask.shape() || p.rank() != 2 || p.cols() != kLayoutDim) {
    throw DimensionError("tlg_loss: prediction " + shape_string(p.shape()) + ", target " +
                         shape_string(target.shape()) + ", mask " + shape_string(mask.shape()));
  }
  Var diff = tape.sub(predicted, tape.constant(target));
  Var masked = tape.mul(tape.mul(diff, diff), tape.constant(mask));
  return tape.scale(tape.sum(masked), 1.0 / static_cast<double>(p.rows() * kLayoutDim));
}

#define VLAD_INSTANTIATE(Real)                                                                       \
  template Tensor<Real> layout_targets(const std::vector<align::PromptSpec>&);                       \
  template Tensor<Real> layout_masks(const std::vector<align::PromptSpec>&);                         \
  template void init_tlg_params(ParamSet<Real>&, Rng&, const TlgDims&);                              \
  template Var tlg_mean(const Bound<Real>&, Var);                                                     \
  template Tensor<Real> tlg_forward(const ParamSet<Real>&, const Tensor<Real>&, Rng&, bool, double); \
  template Var tlg_loss(Tape<Real>&, Var, const Tensor<Real>&, const Tensor<Real>&);

VLAD_INSTANTIATE(float)
VLAD_INSTANTIATE(double)

#undef VLAD_INSTANTIATE

}  // namespace vlad::guidance
