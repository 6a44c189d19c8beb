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

#include "vlad/core/params.hpp"

#include <cmath>

#include "vlad/core/error.hpp"

namespace vlad {

template <typename Real>
void ParamSet<Real>::add(const std::string& name, Tensor<Real> value, bool trainable) {
  if (contains(name)) throw ConfigError("duplicate parameter name " + name);
  index_.emplace(name, names_.size());
  names_.push_back(name);
  values_.push_back(std::move(value));
  trainable_.push_back(trainable);
}

template <typename Real>
std::size_t ParamSet<Real>::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

template <typename Real>
void ParamSet<Real>::set(const std::string& name, Tensor<Real> value) {
  Tensor<Real>& slot = get_mut(name);
  if (slot.shape() != value.shape()) {
    throw DimensionError("parameter " + name + " has shape " + shape_string(slot.shape()) + ", got " +
                         shape_string(value.shape()));
  }
  slot = std::move(value);
}

template <typename Real>
std::size_t ParamSet<Real>::element_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

template <typename Real>
Bound<Real>::Bound(Tape<Real>& tape, const ParamSet<Real>& params) : tape_(&tape), params_(&params) {
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) vars_.push_back(tape.leaf(params.value(i), params.trainable(i)));
}

template <typename Real>
std::vector<Tensor<Real>> Bound<Real>::trainable_grads() const {
  std::vector<Tensor<Real>> out;
  for (std::size_t i = 0; i < params_->size(); ++i) {
    if (params_->trainable(i)) out.push_back(tape_->grad(vars_[i]));
  }
  return out;
}

template <typename Real>
Var linear(const Bound<Real>& p, Var x, const std::string& weight, const std::string& bias) {
  Tape<Real>& tape = p.tape();
  Var y = tape.matmul_nt(x, p(weight));
  const std::string a = lora_a_name(weight);
  if (p.has(a)) {
    Var xb = tape.matmul(x, p(lora_b_name(weight)));
    y = tape.add(y, tape.matmul_nt(xb, p(a)));
  }
  return tape.add_row(y, p(bias));
}

template <typename Real>
Tensor<Real> normal_init(Rng& rng, const Shape& shape, double std) {
  Tensor<Real> out(shape);
  for (Real& v : out.mutable_values()) v = static_cast<Real>(std * rng.gaussian());
  return out;
}

template <typename Real>
Tensor<Real> fan_in_uniform(Rng& rng, const Shape& shape, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor<Real> out(shape);
  for (Real& v : out.mutable_values()) v = static_cast<Real>(bound * (2.0 * rng.uniform() - 1.0));
  return out;
}

template class ParamSet<float>;
template class ParamSet<double>;
template class Bound<float>;
template class Bound<double>;
template Var linear(const Bound<float>&, Var, const std::string&, const std::string&);
template Var linear(const Bound<double>&, Var, const std::string&, const std::string&);
template Tensor<float> normal_init<float>(Rng&, const Shape&, double);
template Tensor<double> normal_init<double>(Rng&, const Shape&, double);
template Tensor<float> fan_in_uniform<float>(Rng&, const Shape&, std::size_t);
template Tensor<double> fan_in_uniform<double>(Rng&, const Shape&, std::size_t);

}  // namespace vlad
