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

#include <string>
#include <unordered_map>
#include <vector>

#include "vlad/core/rng.hpp"
#include "vlad/core/tape.hpp"
#include "vlad/core/tensor.hpp"

namespace vlad {

/// Named, ordered collection of model parameters. Insertion order is the
/// canonical order used by the optimizer and by checkpoints.
template <typename Real>
class ParamSet {
 public:
  void add(const std::string& name, Tensor<Real> value, bool trainable = true);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;

  const Tensor<Real>& get(const std::string& name) const { return values_[index_of(name)]; }
  Tensor<Real>& get_mut(const std::string& name) { return values_[index_of(name)]; }
  void set(const std::string& name, Tensor<Real> value);

  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const Tensor<Real>& value(std::size_t i) const { return values_.at(i); }
  Tensor<Real>& value_mut(std::size_t i) { return values_.at(i); }
  bool trainable(std::size_t i) const { return trainable_.at(i); }
  void set_trainable(const std::string& name, bool trainable) { trainable_[index_of(name)] = trainable; }
  std::size_t element_count() const;

  template <typename Other>
  ParamSet<Other> cast() const {
    ParamSet<Other> out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], values_[i].template cast<Other>(), trainable_[i]);
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<Real>> values_;
  std::vector<bool> trainable_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A ParamSet placed on a tape: every parameter becomes a leaf, with
/// gradients requested only for trainable entries.
template <typename Real>
class Bound {
 public:
  Bound(Tape<Real>& tape, const ParamSet<Real>& params);

  Tape<Real>& tape() const noexcept { return *tape_; }
  const ParamSet<Real>& params() const noexcept { return *params_; }
  Var operator()(const std::string& name) const { return vars_[params_->index_of(name)]; }
  bool has(const std::string& name) const { return params_->contains(name); }

  /// Gradients of all trainable parameters, in ParamSet order. Call after
  /// tape().backward(loss).
  std::vector<Tensor<Real>> trainable_grads() const;

 private:
  Tape<Real>* tape_;
  const ParamSet<Real>* params_;
  std::vector<Var> vars_;
};

/// Names of the low-rank factors attached to a base weight.
inline std::string lora_a_name(const std::string& weight) { return weight + ".lora_a"; }
inline std::string lora_b_name(const std::string& weight) { return weight + ".lora_b"; }

/// Affine layer x W^T + b with W stored [out x in] and x [batch x in].
/// When the set holds low-rank factors for W, adds (x B) A^T, so the adapted
/// weight W + A B^T is never formed.
template <typename Real>
Var linear(const Bound<Real>& p, Var x, const std::string& weight, const std::string& bias);

/// N(0, std^2) entries.
template <typename Real>
Tensor<Real> normal_init(Rng& rng, const Shape& shape, double std);
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) entries.
template <typename Real>
Tensor<Real> fan_in_uniform(Rng& rng, const Shape& shape, std::size_t fan_in);

}  // namespace vlad
