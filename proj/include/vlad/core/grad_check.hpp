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

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "vlad/core/error.hpp"
#include "vlad/core/params.hpp"
#include "vlad/core/tape.hpp"

namespace vlad {

/// Builds a scalar from leaves already placed on the tape.
template <typename Real>
using TapeFunction = std::function<Var(Tape<Real>&, std::span<const Var>)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t coordinates = 0;
};

/// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor);
/// the floor keeps near-zero gradients from dominating. A nonzero
/// scale_floor raises the floor to that fraction of the largest analytic
/// component, for precisions that only resolve gradients relative to their
/// overall scale.
template <typename A, typename B>
GradCheckResult compare_gradients(const std::vector<Tensor<A>>& analytic, const std::vector<Tensor<B>>& numeric,
                                  double floor, double scale_floor = 0.0) {
  if (analytic.size() != numeric.size()) throw DimensionError("compare_gradients: tensor count mismatch");
  double largest = 0;
  for (const auto& t : analytic) {
    for (std::size_t i = 0; i < t.size(); ++i) largest = std::max(largest, std::abs(static_cast<double>(t[i])));
  }
  floor = std::max(floor, scale_floor * largest);
  GradCheckResult result;
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    if (analytic[p].size() != numeric[p].size()) throw DimensionError("compare_gradients: size mismatch");
    for (std::size_t i = 0; i < analytic[p].size(); ++i) {
      const double a = static_cast<double>(analytic[p][i]);
      const double n = static_cast<double>(numeric[p][i]);
      const double abs_err = std::abs(a - n);
      result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
      result.max_relative_error =
          std::max(result.max_relative_error, abs_err / std::max({std::abs(a), std::abs(n), floor}));
      ++result.coordinates;
    }
  }
  return result;
}

/// Tape gradient of f with respect to each input.
template <typename Real>
std::vector<Tensor<Real>> tape_gradient(const TapeFunction<Real>& f, const std::vector<Tensor<Real>>& point) {
  Tape<Real> tape;
  std::vector<Var> leaves;
  for (const auto& t : point) leaves.push_back(tape.leaf(t));
  Var out = f(tape, leaves);
  if (tape.value(out).size() != 1) throw DimensionError("grad_check needs a scalar-valued function");
  tape.backward(out);
  std::vector<Tensor<Real>> grads;
  for (Var v : leaves) grads.push_back(tape.grad(v));
  return grads;
}

/// Fourth-order central differences
/// (f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)) / 12h, coordinate by coordinate.
template <typename Real>
std::vector<Tensor<Real>> numeric_gradient(const TapeFunction<Real>& f, const std::vector<Tensor<Real>>& point,
                                           double h) {
  if (!(h > 0)) throw DomainError("grad_check step must be positive");
  auto evaluate = [&](const std::vector<Tensor<Real>>& at) {
    Tape<Real> tape;
    std::vector<Var> leaves;
    for (const auto& t : at) leaves.push_back(tape.constant(t));
    Var out = f(tape, leaves);
    if (tape.value(out).size() != 1) throw DimensionError("grad_check needs a scalar-valued function");
    return static_cast<double>(tape.value(out).item());
  };
  std::vector<Tensor<Real>> probe = point;
  std::vector<Tensor<Real>> grads;
  for (std::size_t p = 0; p < point.size(); ++p) {
    Tensor<Real> g(point[p].shape());
    for (std::size_t i = 0; i < point[p].size(); ++i) {
      const Real original = point[p][i];
      auto at = [&](double offset) {
        probe[p].mutable_values()[i] = static_cast<Real>(original + offset);
        return evaluate(probe);
      };
      const double d = 8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h));
      probe[p].mutable_values()[i] = original;
      g.mutable_values()[i] = static_cast<Real>(d / (12.0 * h));
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

/// Compares the tape gradient of f at `point` with central differences.
template <typename Real>
GradCheckResult grad_check(const TapeFunction<Real>& f, const std::vector<Tensor<Real>>& point, double h,
                           double floor = 1e-6) {
  return compare_gradients(tape_gradient(f, point), numeric_gradient(f, point, h), floor);
}

/// Builds a scalar from a parameter set bound to a tape.
template <typename Real>
using ParamFunction = std::function<Var(const Bound<Real>&)>;

/// Tape gradients of every trainable parameter, in set order.
template <typename Real>
std::vector<Tensor<Real>> tape_gradient(const ParamFunction<Real>& f, const ParamSet<Real>& params) {
  Tape<Real> tape;
  Bound<Real> bound(tape, params);
  Var out = f(bound);
  if (tape.value(out).size() != 1) throw DimensionError("grad_check needs a scalar-valued function");
  tape.backward(out);
  return bound.trainable_grads();
}

/// Fourth-order central differences over every trainable coordinate.
template <typename Real>
std::vector<Tensor<Real>> numeric_gradient(const ParamFunction<Real>& f, const ParamSet<Real>& params, double h) {
  if (!(h > 0)) throw DomainError("grad_check step must be positive");
  auto evaluate = [&](const ParamSet<Real>& at) {
    Tape<Real> tape;
    Bound<Real> bound(tape, at);
    Var out = f(bound);
    if (tape.value(out).size() != 1) throw DimensionError("grad_check needs a scalar-valued function");
    return static_cast<double>(tape.value(out).item());
  };
  ParamSet<Real> probe = params;
  std::vector<Tensor<Real>> grads;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params.trainable(p)) continue;
    Tensor<Real> g(params.value(p).shape());
    for (std::size_t i = 0; i < params.value(p).size(); ++i) {
      const Real original = params.value(p)[i];
      auto at = [&](double offset) {
        probe.value_mut(p).mutable_values()[i] = static_cast<Real>(original + offset);
        return evaluate(probe);
      };
      const double d = 8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h));
      probe.value_mut(p).mutable_values()[i] = original;
      g.mutable_values()[i] = static_cast<Real>(d / (12.0 * h));
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

/// grad_check over every trainable coordinate of a parameter set.
template <typename Real>
GradCheckResult grad_check_params(const ParamFunction<Real>& f, const ParamSet<Real>& params, double h,
                                  double floor = 1e-6) {
  return compare_gradients(tape_gradient(f, params), numeric_gradient(f, params, h), floor);
}

}  // namespace vlad
