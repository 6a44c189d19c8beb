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

#include "vlad/core/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vlad/core/error.hpp"

namespace vlad {

const char* op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kMatmulNT: return "matmul_nt";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kReshape: return "reshape";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSin: return "sin";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kMulRows: return "mul_rows";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSumRows: return "sum_rows";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kLogSoftmaxRows: return "log_softmax_rows";
    case OpKind::kNormalizeRows: return "normalize_rows";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kGatherRows: return "gather_rows";
  }
  return "unknown";
}

namespace {

template <typename Real>
void require_matrix(const Tensor<Real>& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

template <typename Real>
std::vector<Real> buffer(const Tensor<Real>& t) {
  return std::vector<Real>(t.values().begin(), t.values().end());
}

}  // namespace

template <typename Real>
Var Tape<Real>::push(OpKind kind, std::vector<std::size_t> inputs, T value) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op_name(kind) + " with shape " +
                       shape_string(value.shape()));
  }
  Node n;
  n.kind = kind;
  for (std::size_t i : inputs) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename Real>
Var Tape<Real>::leaf(T value, bool requires_grad) {
  Var v = push(OpKind::kLeaf, {}, std::move(value));
  nodes_.back().requires_grad = requires_grad;
  return v;
}

template <typename Real>
Var Tape<Real>::matmul(Var a, Var b) {
  const T& x = value(a);
  const T& y = value(b);
  require_matrix(x, "matmul");
  require_matrix(y, "matmul");
  if (x.cols() != y.rows()) {
    throw DimensionError("matmul: " + shape_string(x.shape()) + " x " + shape_string(y.shape()));
  }
  std::vector<Real> out(x.rows() * y.cols());
  kernels::gemm(false, false, x.rows(), y.cols(), x.cols(), x.values().data(), y.values().data(),
                out.data(), false);
  return push(OpKind::kMatmul, {a.index, b.index}, T({x.rows(), y.cols()}, std::move(out)));
}

template <typename Real>
Var Tape<Real>::matmul_nt(Var a, Var b) {
  const T& x = value(a);
  const T& y = value(b);
  require_matrix(x, "matmul_nt");
  require_matrix(y, "matmul_nt");
  if (x.cols() != y.cols()) {
    throw DimensionError("matmul_nt: " + shape_string(x.shape()) + " x transpose of " +
                         shape_string(y.shape()));
  }
  std::vector<Real> out(x.rows() * y.rows());
  kernels::gemm(false, true, x.rows(), y.rows(), x.cols(), x.values().data(), y.values().data(),
                out.data(), false);
  return push(OpKind::kMatmulNT, {a.index, b.index}, T({x.rows(), y.rows()}, std::move(out)));
}

template <typename Real>
Var Tape<Real>::transpose(Var a) {
  require_matrix(value(a), "transpose");
  return push(OpKind::kTranspose, {a.index}, vlad::transpose(value(a)));
}

template <typename Real>
Var Tape<Real>::reshape(Var a, Shape shape) {
  return push(OpKind::kReshape, {a.index}, value(a).reshaped(std::move(shape)));
}

namespace {

template <typename Real>
bool is_scalar_operand(const Tensor<Real>& a, const Tensor<Real>& b) {
  return b.size() == 1 && a.shape() != b.shape();
}

template <typename Real>
void check_binary(const Tensor<Real>& a, const Tensor<Real>& b, const char* op) {
  if (a.shape() != b.shape() && b.size() != 1) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

}  // namespace

template <typename Real>
Var Tape<Real>::add(Var a, Var b) {
  const T& x = value(a);
  const T& y = value(b);
  check_binary(x, y, "add");
  std::vector<Real> out = buffer(x);
  if (y.size() == 1) {
    for (Real& v : out) v += y[0];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  }
  return push(OpKind::kAdd, {a.index, b.index}, T(x.shape(), std::move(out)));
}

template <typename Real>
Var Tape<Real>::sub(Var a, Var b) {
  const T& x = value(a);
  const T& y = value(b);
  check_binary(x, y, "sub");
  std::vector<Real> out = buffer(x);
  if (y.size() == 1) {
    for (Real& v : out) v -= y[0];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  }
  return push(OpKind::kSub, {a.index, b.index}, T(x.shape(), std::move(out)));
}

template <typename Real>
Var Tape<Real>::mul(Var a, Var b) {
  const T& x = value(a);
  const T& y = value(b);
  check_binary(x, y, "mul");
  std::vector<Real> out = buffer(x);
  if (y.size() == 1) {
    for (Real& v : out) v *= y[0];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  }
  return push(OpKind::kMul, {a.index, b.index}, T(x.shape(), std::move(out)));
}

template <typename Real>
Var Tape<Real>::scale(Var a, double factor) {
  std::vector<Real> out = buffer(value(a));
  for (Real& v : out) v *= static_cast<Real>(factor);
  Var r = push(OpKind::kScale, {a.index}, T(value(a).shape(), std::move(out)));
  nodes_.back().scalar = factor;
  return r;
}

template <typename Real>
Var Tape<Real>::add_scalar(Var a, double offset) {
  std::vector<Real> out = buffer(value(a));
  for (Real& v : out) v += static_cast<Real>(offset);
  Var r = push(OpKind::kAddScalar, {a.index}, T(value(a).shape(), std::move(out)));
  nodes_.back().scalar = offset;
  return r;
}

#define VLAD_UNARY(name, kind, expr)                                  \
  template <typename Real>                                            \
  Var Tape<Real>::name(Var a) {                                       \
    std::vector<Real> out = buffer(value(a));                         \
    for (Real& x : out) x = (expr);                                   \
    return push(kind, {a.index}, T(value(a).shape(), std::move(out))); \
  }

VLAD_UNARY(relu, OpKind::kRelu, x > Real(0) ? x : Real(0))
VLAD_UNARY(tanh, OpKind::kTanh, std::tanh(x))
VLAD_UNARY(exp, OpKind::kExp, std::exp(x))
VLAD_UNARY(sigmoid, OpKind::kSigmoid,
           x >= Real(0) ? Real(1) / (Real(1) + std::exp(-x)) : std::exp(x) / (Real(1) + std::exp(x)))
VLAD_UNARY(sin, OpKind::kSin, std::sin(x))

#undef VLAD_UNARY

template <typename Real>
Var Tape<Real>::log(Var a) {
  std::vector<Real> out = buffer(value(a));
  for (Real& x : out) {
    if (!(x > Real(0))) throw DomainError("log of non-positive value " + std::to_string(x));
    x = std::log(x);
  }
  return push(OpKind::kLog, {a.index}, T(value(a).shape(), std::move(out)));
}

template <typename Real>
Var Tape<Real>::add_row(Var a, Var bias) {
  const T& x = value(a);
  const T& b = value(bias);
  require_matrix(x, "add_row");
  if (b.size() != x.cols()) {
    throw DimensionError("add_row: bias " + shape_string(b.shape()) + " for rows of " +
                         shape_string(x.shape()));
  }
  std::vector<Real> out = buffer(x);
  const std::size_t n = x.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % n];
  return push(OpKind::kAddRow, {a.index, bias.index}, T(x.shape(), std::move(out)));
}

template <typename Real>
Var Tape<Real>::mul_rows(Var a, Var w) {
  const T& x = value(a);
  const T& s = value(w);
  require_matrix(x, "mul_rows");
  if (s.size() != x.rows()) {
    throw DimensionError("mul_rows: weights " + shape_string(s.shape()) + " for " +
                         shape_string(x.shape()));
  }
  std::vector<Real> out = buffer(x);
  const std::size_t n = x.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s[i / n];
  return push(OpKind::kMulRows, {a.index, w.index}, T(x.shape(), std::move(out)));
}

template <typename Real>
Var Tape<Real>::sum(Var a) {
  Real total = 0;
  for (Real v : value(a).values()) total += v;
  return push(OpKind::kSum, {a.index}, T::scalar(total));
}

template <typename Real>
Var Tape<Real>::mean(Var a) {
  Real total = 0;
  for (Real v : value(a).values()) total += v;
  return push(OpKind::kMean, {a.index}, T::scalar(total / static_cast<Real>(value(a).size())));
}

template <typename Real>
Var Tape<Real>::sum_rows(Var a) {
  const T& x = value(a);
  require_matrix(x, "sum_rows");
  std::vector<Real> out(x.rows(), Real(0));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out[i] += x.at(i, j);
  }
  return push(OpKind::kSumRows, {a.index}, T({x.rows()}, std::move(out)));
}

template <typename Real>
Var Tape<Real>::softmax_rows(Var a) {
  const T& x = value(a);
  require_matrix(x, "softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<Real> out = buffer(x);
  for (std::size_t i = 0; i < m; ++i) {
    Real* row = out.data() + i * n;
    const Real peak = *std::max_element(row, row + n);
    Real total = 0;
    for (std::size_t j = 0; j < n; ++j) total += (row[j] = std::exp(row[j] - peak));
    for (std::size_t j = 0; j < n; ++j) row[j] /= total;
  }
  return push(OpKind::kSoftmaxRows, {a.index}, T(x.shape(), std::move(out)));
}

template <typename Real>
Var Tape<Real>::log_softmax_rows(Var a) {
  const T& x = value(a);
  require_matrix(x, "log_softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<Real> out = buffer(x);
  for (std::size_t i = 0; i < m; ++i) {
    Real* row = out.data() + i * n;
    const Real peak = *std::max_element(row, row + n);
    Real total = 0;
    for (std::size_t j = 0; j < n; ++j) total += std::exp(row[j] - peak);
    const Real log_z = peak + std::log(total);
    for (std::size_t j = 0; j < n; ++j) row[j] -= log_z;
  }
  return push(OpKind::kLogSoftmaxRows, {a.index}, T(x.shape(), std::move(out)));
}

template <typename Real>
Var Tape<Real>::normalize_rows(Var a) {
  const T& x = value(a);
  require_matrix(x, "normalize_rows");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<Real> out = buffer(x);
  std::vector<Real> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    Real* row = out.data() + i * n;
    Real sq = 0;
    for (std::size_t j = 0; j < n; ++j) sq += row[j] * row[j];
    if (!(sq > Real(0))) throw NumericError("normalize_rows: zero-norm row " + std::to_string(i));
    norms[i] = std::sqrt(sq);
    for (std::size_t j = 0; j < n; ++j) row[j] /= norms[i];
  }
  Var r = push(OpKind::kNormalizeRows, {a.index}, T(x.shape(), std::move(out)));
  nodes_.back().saved = T({m}, std::move(norms));
  return r;
}

template <typename Real>
Var Tape<Real>::concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const T& first = value(parts[0]);
  const std::size_t rank = first.rank();
  if (rank > 2 || axis >= rank) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " invalid for " +
                         shape_string(first.shape()));
  }
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> extents;
  Shape shape = first.shape();
  shape[axis] = 0;
  for (Var p : parts) {
    const T& t = value(p);
    bool ok = t.rank() == rank;
    for (std::size_t d = 0; ok && d < rank; ++d) ok = d == axis || t.shape()[d] == first.shape()[d];
    if (!ok) {
      throw DimensionError("concat: " + shape_string(t.shape()) + " incompatible with " +
                           shape_string(first.shape()) + " along axis " + std::to_string(axis));
    }
    inputs.push_back(p.index);
    extents.push_back(t.shape()[axis]);
    shape[axis] += t.shape()[axis];
  }
  std::vector<Real> out;
  out.reserve(shape_numel(shape));
  if (axis == 0) {
    for (Var p : parts) out.insert(out.end(), value(p).values().begin(), value(p).values().end());
  } else {
    for (std::size_t i = 0; i < shape[0]; ++i) {
      for (Var p : parts) {
        const T& t = value(p);
        auto row = t.values().subspan(i * t.cols(), t.cols());
        out.insert(out.end(), row.begin(), row.end());
      }
    }
  }
  Var r = push(OpKind::kConcat, std::move(inputs), T(shape, std::move(out)));
  nodes_.back().aux = std::move(extents);
  nodes_.back().aux.push_back(axis);
  return r;
}

template <typename Real>
Var Tape<Real>::slice(Var a, std::size_t axis, std::size_t start, std::size_t length) {
  const T& x = value(a);
  if (x.rank() > 2 || axis >= x.rank() || length == 0 || start + length > x.shape()[axis]) {
    throw DimensionError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                         ") on axis " + std::to_string(axis) + " of " + shape_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = length;
  std::vector<Real> out;
  out.reserve(shape_numel(shape));
  if (axis == 0) {
    const std::size_t inner = x.rank() == 2 ? x.cols() : 1;
    auto span = x.values().subspan(start * inner, length * inner);
    out.assign(span.begin(), span.end());
  } else {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto span = x.values().subspan(i * x.cols() + start, length);
      out.insert(out.end(), span.begin(), span.end());
    }
  }
  Var r = push(OpKind::kSlice, {a.index}, T(shape, std::move(out)));
  nodes_.back().aux = {axis, start, length};
  return r;
}

template <typename Real>
Var Tape<Real>::gather_rows(Var table, std::span<const std::size_t> ids) {
  const T& x = value(table);
  require_matrix(x, "gather_rows");
  if (ids.empty()) throw DimensionError("gather_rows: no ids");
  const std::size_t d = x.cols();
  std::vector<Real> out;
  out.reserve(ids.size() * d);
  for (std::size_t id : ids) {
    if (id >= x.rows()) {
      throw DimensionError("gather_rows: id " + std::to_string(id) + " outside table " +
                           shape_string(x.shape()));
    }
    auto row = x.values().subspan(id * d, d);
    out.insert(out.end(), row.begin(), row.end());
  }
  Var r = push(OpKind::kGatherRows, {table.index}, T({ids.size(), d}, std::move(out)));
  nodes_.back().aux.assign(ids.begin(), ids.end());
  return r;
}

template <typename Real>
void Tape<Real>::accumulate(std::size_t index, std::span<const Real> delta) {
  if (!nodes_[index].requires_grad) return;
  auto& slot = grads_[index];
  if (!slot) {
    slot.emplace(delta.begin(), delta.end());
    return;
  }
  for (std::size_t i = 0; i < delta.size(); ++i) (*slot)[i] += delta[i];
}

template <typename Real>
void Tape<Real>::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw DimensionError("backward needs a scalar loss, got " + shape_string(value(loss).shape()));
  }
  grads_.assign(nodes_.size(), std::nullopt);
  if (!node(loss).requires_grad) return;
  grads_[loss.index].emplace(1, Real(1));
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (grads_[i] && nodes_[i].kind != OpKind::kLeaf) backward_node(i);
  }
}

template <typename Real>
Tensor<Real> Tape<Real>::grad(Var v) const {
  const T& x = value(v);
  if (v.index < grads_.size() && grads_[v.index]) return T(x.shape(), *grads_[v.index]);
  return T(x.shape());
}

template <typename Real>
void Tape<Real>::backward_node(std::size_t index) {
  const Node& n = nodes_[index];
  const std::vector<Real>& g = *grads_[index];
  const T& y = n.value;
  auto input = [&](std::size_t k) -> const Node& { return nodes_[n.inputs[k]]; };
  auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };
  auto pointwise = [&](auto fn) {
    const T& x = input(0).value;
    std::vector<Real> d(g.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * fn(x[i], y[i]);
    accumulate(n.inputs[0], d);
  };

  switch (n.kind) {
    case OpKind::kLeaf:
      break;
    case OpKind::kMatmul: {
      const T& a = input(0).value;
      const T& b = input(1).value;
      const std::size_t m = a.rows(), k = a.cols(), c = b.cols();
      if (wants(0)) {
        std::vector<Real> da(m * k);
        kernels::gemm(false, true, m, k, c, g.data(), b.values().data(), da.data(), false);
        accumulate(n.inputs[0], da);
      }
      if (wants(1)) {
        std::vector<Real> db(k * c);
        kernels::gemm(true, false, k, c, m, a.values().data(), g.data(), db.data(), false);
        accumulate(n.inputs[1], db);
      }
      break;
    }
    case OpKind::kMatmulNT: {
      const T& a = input(0).value;
      const T& b = input(1).value;
      const std::size_t m = a.rows(), k = a.cols(), c = b.rows();
      if (wants(0)) {
        std::vector<Real> da(m * k);
        kernels::gemm(false, false, m, k, c, g.data(), b.values().data(), da.data(), false);
        accumulate(n.inputs[0], da);
      }
      if (wants(1)) {
        std::vector<Real> db(c * k);
        kernels::gemm(true, false, c, k, m, g.data(), a.values().data(), db.data(), false);
        accumulate(n.inputs[1], db);
      }
      break;
    }
    case OpKind::kTranspose: {
      const T gt = vlad::transpose(T(y.shape(), g));
      accumulate(n.inputs[0], gt.values());
      break;
    }
    case OpKind::kReshape:
      accumulate(n.inputs[0], g);
      break;
    case OpKind::kAdd:
    case OpKind::kSub: {
      accumulate(n.inputs[0], g);
      if (wants(1)) {
        const Real sign = n.kind == OpKind::kAdd ? Real(1) : Real(-1);
        if (is_scalar_operand(input(0).value, input(1).value)) {
          Real total = 0;
          for (Real v : g) total += v;
          const Real d = sign * total;
          accumulate(n.inputs[1], std::span<const Real>(&d, 1));
        } else {
          std::vector<Real> d(g);
          for (Real& v : d) v *= sign;
          accumulate(n.inputs[1], d);
        }
      }
      break;
    }
    case OpKind::kMul: {
      const T& a = input(0).value;
      const T& b = input(1).value;
      const bool scalar_b = is_scalar_operand(a, b);
      if (wants(0)) {
        std::vector<Real> d(g.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * (scalar_b ? b[0] : b[i]);
        accumulate(n.inputs[0], d);
      }
      if (wants(1)) {
        if (scalar_b) {
          Real total = 0;
          for (std::size_t i = 0; i < g.size(); ++i) total += g[i] * a[i];
          accumulate(n.inputs[1], std::span<const Real>(&total, 1));
        } else {
          std::vector<Real> d(g.size());
          for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * a[i];
          accumulate(n.inputs[1], d);
        }
      }
      break;
    }
    case OpKind::kScale: {
      std::vector<Real> d(g);
      for (Real& v : d) v *= static_cast<Real>(n.scalar);
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kAddScalar:
      accumulate(n.inputs[0], g);
      break;
    case OpKind::kRelu:
      pointwise([](Real x, Real) { return x > Real(0) ? Real(1) : Real(0); });
      break;
    case OpKind::kTanh:
      pointwise([](Real, Real out) { return Real(1) - out * out; });
      break;
    case OpKind::kExp:
      pointwise([](Real, Real out) { return out; });
      break;
    case OpKind::kLog:
      pointwise([](Real x, Real) { return Real(1) / x; });
      break;
    case OpKind::kSigmoid:
      pointwise([](Real, Real out) { return out * (Real(1) - out); });
      break;
    case OpKind::kSin:
      pointwise([](Real x, Real) { return std::cos(x); });
      break;
    case OpKind::kAddRow: {
      accumulate(n.inputs[0], g);
      if (wants(1)) {
        const std::size_t cols = y.cols();
        std::vector<Real> d(cols, Real(0));
        for (std::size_t i = 0; i < g.size(); ++i) d[i % cols] += g[i];
        accumulate(n.inputs[1], d);
      }
      break;
    }
    case OpKind::kMulRows: {
      const T& a = input(0).value;
      const T& w = input(1).value;
      const std::size_t cols = a.cols();
      if (wants(0)) {
        std::vector<Real> d(g.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * w[i / cols];
        accumulate(n.inputs[0], d);
      }
      if (wants(1)) {
        std::vector<Real> d(w.size(), Real(0));
        for (std::size_t i = 0; i < g.size(); ++i) d[i / cols] += g[i] * a[i];
        accumulate(n.inputs[1], d);
      }
      break;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      const std::size_t count = input(0).value.size();
      const Real each = n.kind == OpKind::kSum ? g[0] : g[0] / static_cast<Real>(count);
      accumulate(n.inputs[0], std::vector<Real>(count, each));
      break;
    }
    case OpKind::kSumRows: {
      const std::size_t cols = input(0).value.cols();
      std::vector<Real> d(input(0).value.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i / cols];
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kSoftmaxRows: {
      const std::size_t m = y.rows(), c = y.cols();
      std::vector<Real> d(g.size());
      for (std::size_t i = 0; i < m; ++i) {
        Real dot = 0;
        for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
        for (std::size_t j = 0; j < c; ++j) d[i * c + j] = y[i * c + j] * (g[i * c + j] - dot);
      }
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kLogSoftmaxRows: {
      const std::size_t m = y.rows(), c = y.cols();
      std::vector<Real> d(g.size());
      for (std::size_t i = 0; i < m; ++i) {
        Real total = 0;
        for (std::size_t j = 0; j < c; ++j) total += g[i * c + j];
        for (std::size_t j = 0; j < c; ++j) d[i * c + j] = g[i * c + j] - std::exp(y[i * c + j]) * total;
      }
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kNormalizeRows: {
      const std::size_t m = y.rows(), c = y.cols();
      std::vector<Real> d(g.size());
      for (std::size_t i = 0; i < m; ++i) {
        Real dot = 0;
        for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
        const Real inv = Real(1) / n.saved[i];
        for (std::size_t j = 0; j < c; ++j) d[i * c + j] = (g[i * c + j] - dot * y[i * c + j]) * inv;
      }
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kConcat: {
      const std::size_t axis = n.aux.back();
      const std::size_t parts = n.inputs.size();
      if (axis == 0) {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < parts; ++p) {
          const std::size_t len = input(p).value.size();
          accumulate(n.inputs[p], std::span<const Real>(g.data() + offset, len));
          offset += len;
        }
      } else {
        const std::size_t rows = y.rows(), cols = y.cols();
        std::size_t col0 = 0;
        for (std::size_t p = 0; p < parts; ++p) {
          const std::size_t width = n.aux[p];
          if (wants(p)) {
            std::vector<Real> d(rows * width);
            for (std::size_t i = 0; i < rows; ++i) {
              std::copy_n(g.data() + i * cols + col0, width, d.data() + i * width);
            }
            accumulate(n.inputs[p], d);
          }
          col0 += width;
        }
      }
      break;
    }
    case OpKind::kSlice: {
      const std::size_t axis = n.aux[0], start = n.aux[1], length = n.aux[2];
      const T& x = input(0).value;
      std::vector<Real> d(x.size(), Real(0));
      if (axis == 0) {
        const std::size_t inner = x.rank() == 2 ? x.cols() : 1;
        std::copy(g.begin(), g.end(), d.begin() + static_cast<std::ptrdiff_t>(start * inner));
      } else {
        for (std::size_t i = 0; i < x.rows(); ++i) {
          std::copy_n(g.data() + i * length, length, d.data() + i * x.cols() + start);
        }
      }
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kGatherRows: {
      const T& x = input(0).value;
      const std::size_t c = x.cols();
      std::vector<Real> d(x.size(), Real(0));
      for (std::size_t r = 0; r < n.aux.size(); ++r) {
        for (std::size_t j = 0; j < c; ++j) d[n.aux[r] * c + j] += g[r * c + j];
      }
      accumulate(n.inputs[0], d);
      break;
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace vlad
