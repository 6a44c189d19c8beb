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

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "vlad/core/tensor.hpp"

namespace vlad {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t index = 0;
};

enum class OpKind {
  kLeaf,
  kMatmul,
  kMatmulNT,
  kTranspose,
  kReshape,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kRelu,
  kTanh,
  kExp,
  kLog,
  kSigmoid,
  kSin,
  kAddRow,
  kMulRows,
  kSum,
  kMean,
  kSumRows,
  kSoftmaxRows,
  kLogSoftmaxRows,
  kNormalizeRows,
  kConcat,
  kSlice,
  kGatherRows,
};

const char* op_name(OpKind kind) noexcept;

/// Reverse-mode autodiff recorder for one computation.
///
/// Every op appends one entry whose inputs are earlier entries, so the entry
/// list is already in topological order. Each result is checked for NaN/Inf
/// as it is produced; a non-finite value raises NumericError naming the op.
/// A Tape is not thread-safe and is meant to live for one training step.
template <typename Real>
class Tape {
 public:
  using T = Tensor<Real>;

  Var leaf(T value, bool requires_grad = true);
  Var constant(T value) { return leaf(std::move(value), false); }

  const T& value(Var v) const { return nodes_.at(v.index).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.index).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// a [m x k] * b [k x n].
  Var matmul(Var a, Var b);
  /// a [m x k] * b^T where b is [n x k]. Used for row-major linear layers.
  Var matmul_nt(Var a, Var b);
  Var transpose(Var a);
  Var reshape(Var a, Shape shape);

  /// Binary ops need equal shapes, or b with a single element (scalar).
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var add_scalar(Var a, double offset);

  Var relu(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  /// Throws DomainError for any input <= 0.
  Var log(Var a);
  Var sigmoid(Var a);
  Var sin(Var a);

  /// a [m x n] plus bias [n] added to every row.
  Var add_row(Var a, Var bias);
  /// Row i of a [m x n] scaled by w[i]; w has m elements.
  Var mul_rows(Var a, Var w);

  Var sum(Var a);
  Var mean(Var a);
  /// [m x n] -> [m].
  Var sum_rows(Var a);
  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);
  /// Divides each row by its L2 norm.
  Var normalize_rows(Var a);

  /// Joins rank-1 tensors (axis 0) or rank-2 tensors (axis 0 or 1).
  Var concat(std::span<const Var> parts, std::size_t axis);
  Var concat(std::initializer_list<Var> parts, std::size_t axis) {
    return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
  }
  /// Contiguous range [start, start + length) along axis.
  Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length);
  /// Rows of table [V x d] selected by ids, giving [ids.size() x d].
  Var gather_rows(Var table, std::span<const std::size_t> ids);

  /// Fills gradients for every entry reachable from the scalar loss.
  /// Throws DimensionError if loss has more than one element.
  void backward(Var loss);
  /// Gradient of the last backward loss w.r.t. v. Zero if v was not on any
  /// path to the loss.
  T grad(Var v) const;

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<std::size_t> inputs;
    T value;
    T saved;
    double scalar = 0.0;
    std::vector<std::size_t> aux;
    bool requires_grad = false;
  };

  Var push(OpKind kind, std::vector<std::size_t> inputs, T value);
  Node& node(Var v) { return nodes_.at(v.index); }
  const Node& node(Var v) const { return nodes_.at(v.index); }
  void accumulate(std::size_t index, std::span<const Real> delta);
  void backward_node(std::size_t index);

  std::deque<Node> nodes_;  // deque keeps value() references valid as the tape grows
  std::vector<std::optional<std::vector<Real>>> grads_;
};

}  // namespace vlad
