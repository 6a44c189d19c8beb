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

#include "vlad/core/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "vlad/core/error.hpp"

namespace vlad {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

void check_extents(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
}

}  // namespace

template <typename Real>
Tensor<Real>::Tensor() : Tensor(Shape{1}) {}

template <typename Real>
Tensor<Real>::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_ = std::make_shared<std::vector<Real>>(shape_numel(shape_), Real{0});
}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> values) : shape_(std::move(shape)) {
  check_extents(shape_);
  if (values.size() != shape_numel(shape_)) {
    throw DimensionError("tensor of shape " + shape_string(shape_) + " needs " +
                         std::to_string(shape_numel(shape_)) + " values, got " +
                         std::to_string(values.size()));
  }
  data_ = std::make_shared<std::vector<Real>>(std::move(values));
}

template <typename Real>
Tensor<Real> Tensor<Real>::scalar(Real value) {
  return Tensor(Shape{1}, std::vector<Real>{value});
}

template <typename Real>
Tensor<Real> Tensor<Real>::filled(Shape shape, Real value) {
  check_extents(shape);
  std::vector<Real> values(shape_numel(shape), value);
  return Tensor(std::move(shape), std::move(values));
}

template <typename Real>
Tensor<Real> Tensor<Real>::matrix(std::initializer_list<std::initializer_list<Real>> rows) {
  std::vector<Real> values;
  std::size_t width = rows.size() ? rows.begin()->size() : 0;
  for (const auto& row : rows) {
    if (row.size() != width) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor(Shape{rows.size(), width}, std::move(values));
}

template <typename Real>
Tensor<Real> Tensor<Real>::vector(std::initializer_list<Real> values) {
  return Tensor(Shape{values.size()}, std::vector<Real>(values));
}

template <typename Real>
std::size_t Tensor<Real>::rows() const {
  if (rank() != 2) throw DimensionError("rows() needs a rank-2 tensor, got " + shape_string(shape_));
  return shape_[0];
}

template <typename Real>
std::size_t Tensor<Real>::cols() const {
  if (rank() != 2) throw DimensionError("cols() needs a rank-2 tensor, got " + shape_string(shape_));
  return shape_[1];
}

template <typename Real>
std::span<Real> Tensor<Real>::mutable_values() {
  if (data_.use_count() > 1) data_ = std::make_shared<std::vector<Real>>(*data_);
  return {data_->data(), data_->size()};
}

template <typename Real>
Real Tensor<Real>::at(std::size_t row, std::size_t col) const {
  return (*data_)[row * cols() + col];
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (size() != 1) throw DimensionError("item() needs a one-element tensor, got " + shape_string(shape_));
  return (*data_)[0];
}

template <typename Real>
Tensor<Real> Tensor<Real>::reshaped(Shape shape) const {
  check_extents(shape);
  if (shape_numel(shape) != size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

template <typename Real>
bool Tensor<Real>::all_finite() const noexcept {
  return std::all_of(data_->begin(), data_->end(), [](Real v) { return std::isfinite(v); });
}

template <typename Real>
bool bit_equal(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(Real)) == 0;
}

template <typename Real>
Real max_abs_diff(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_abs_diff: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Real worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

namespace kernels {

template <typename Real>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate) {
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstMap = Eigen::Map<const Mat>;
  Eigen::Map<Mat> out(c, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  const auto mi = static_cast<Eigen::Index>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  const auto ki = static_cast<Eigen::Index>(k);
  if (!accumulate) out.setZero();
  if (!trans_a && !trans_b) {
    out.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ki, ni);
  } else if (!trans_a && trans_b) {
    out.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ni, ki).transpose();
  } else if (trans_a && !trans_b) {
    out.noalias() += ConstMap(a, ki, mi).transpose() * ConstMap(b, ki, ni);
  } else {
    out.noalias() += ConstMap(a, ki, mi).transpose() * ConstMap(b, ni, ki).transpose();
  }
}

template void gemm<float>(bool, bool, std::size_t, std::size_t, std::size_t, const float*, const float*,
                          float*, bool);
template void gemm<double>(bool, bool, std::size_t, std::size_t, std::size_t, const double*,
                           const double*, double*, bool);

}  // namespace kernels

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<Real> out(a.rows() * b.cols());
  kernels::gemm(false, false, a.rows(), b.cols(), a.cols(), a.values().data(), b.values().data(),
                out.data(), false);
  return Tensor<Real>(Shape{a.rows(), b.cols()}, std::move(out));
}

template <typename Real>
Tensor<Real> transpose(const Tensor<Real>& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<Real> out(r * c);
  auto in = a.values();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  }
  return Tensor<Real>(Shape{c, r}, std::move(out));
}

template class Tensor<float>;
template class Tensor<double>;
template bool bit_equal(const Tensor<float>&, const Tensor<float>&);
template bool bit_equal(const Tensor<double>&, const Tensor<double>&);
template float max_abs_diff(const Tensor<float>&, const Tensor<float>&);
template double max_abs_diff(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> matmul(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> matmul(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> transpose(const Tensor<float>&);
template Tensor<double> transpose(const Tensor<double>&);

}  // namespace vlad
