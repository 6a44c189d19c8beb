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

#include "vlad/guidance/lora.hpp"

#include "vlad/core/error.hpp"

namespace vlad::guidance {

const std::vector<std::string>& default_lora_targets() {
  static const std::vector<std::string> targets = {"den.w1", "text.w1", "text.w2", "image.w1", "image.w2"};
  return targets;
}

namespace {

template <typename Real>
void check_adapter(const Tensor<Real>& base, const LoraAdapter<Real>& adapter) {
  if (base.rank() != 2 || adapter.a.rank() != 2 || adapter.b.rank() != 2 || adapter.a.rows() != base.rows() ||
      adapter.b.rows() != base.cols() || adapter.a.cols() != adapter.b.cols()) {
    throw DimensionError("lora: base " + shape_string(base.shape()) + " with A " + shape_string(adapter.a.shape()) +
                         " and B " + shape_string(adapter.b.shape()));
  }
}

}  // namespace

template <typename Real>
LoraAdapter<Real> make_adapter(const Tensor<Real>& base, std::size_t rank, const std::string& target, Rng& rng) {
  if (rank == 0 || base.rank() != 2) throw DimensionError("lora: rank must be positive and base a matrix");
  return {normal_init<Real>(rng, {base.rows(), rank}, 0.02), Tensor<Real>({base.cols(), rank}), rank, target};
}

template <typename Real>
Tensor<Real> lora_apply(const Tensor<Real>& base, const LoraAdapter<Real>& adapter, const Tensor<Real>& x) {
  check_adapter(base, adapter);
  const bool vec = x.rank() == 1;
  const Tensor<Real> col = vec ? x.reshaped({x.size(), 1}) : x;
  if (col.rank() != 2 || col.rows() != base.cols()) {
    throw DimensionError("lora_apply: input " + shape_string(x.shape()) + " for base " + shape_string(base.shape()));
  }
  Tensor<Real> out = matmul(base, col);
  const Tensor<Real> low = matmul(adapter.a, matmul(transpose(adapter.b), col));
  auto o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += low[i];
  return vec ? out.reshaped({out.size()}) : out;
}

template <typename Real>
Tensor<Real> lora_merge(const Tensor<Real>& base, const LoraAdapter<Real>& adapter) {
  check_adapter(base, adapter);
  Tensor<Real> out = base;
  const Tensor<Real> delta = matmul(adapter.a, transpose(adapter.b));
  auto o = out.mutable_values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += delta[i];
  return out;
}

template <typename Real>
void attach_lora(ParamSet<Real>& params, const std::vector<std::string>& targets, std::size_t rank, Rng& rng) {
  for (const std::string& target : targets) {
    LoraAdapter<Real> adapter = make_adapter(params.get(target), rank, target, rng);
    params.add(lora_a_name(target), adapter.a);
    params.add(lora_b_name(target), adapter.b);
    params.set_trainable(target, false);
  }
}

template <typename Real>
LoraAdapter<Real> adapter_of(const ParamSet<Real>& params, const std::string& target) {
  const Tensor<Real>& a = params.get(lora_a_name(target));
  return {a, params.get(lora_b_name(target)), a.cols(), target};
}

template <typename Real>
ParamSet<Real> merge_all(const ParamSet<Real>& params) {
  ParamSet<Real> out;
  const std::string suffix_a = ".lora_a", suffix_b = ".lora_b";
  auto ends_with = [](const std::string& s, const std::string& tail) {
    return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    if (ends_with(name, suffix_a) || ends_with(name, suffix_b)) continue;
    if (params.contains(lora_a_name(name))) {
      out.add(name, lora_merge(params.value(i), adapter_of(params, name)), true);
    } else {
      out.add(name, params.value(i), params.trainable(i));
    }
  }
  return out;
}

#define VLAD_INSTANTIATE(Real)                                                                                 \
  template LoraAdapter<Real> make_adapter(const Tensor<Real>&, std::size_t, const std::string&, Rng&);         \
  template Tensor<Real> lora_apply(const Tensor<Real>&, const LoraAdapter<Real>&, const Tensor<Real>&);        \
  template Tensor<Real> lora_merge(const Tensor<Real>&, const LoraAdapter<Real>&);                             \
  template void attach_lora(ParamSet<Real>&, const std::vector<std::string>&, std::size_t, Rng&);              \
  template LoraAdapter<Real> adapter_of(const ParamSet<Real>&, const std::string&);                            \
  template ParamSet<Real> merge_all(const ParamSet<Real>&);

VLAD_INSTANTIATE(float)
VLAD_INSTANTIATE(double)

#undef VLAD_INSTANTIATE

}  // namespace vlad::guidance
