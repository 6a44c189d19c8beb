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
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vlad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array with shape metadata.
///
/// Storage is shared between copies and treated as immutable; the only
/// mutation path is mutable_values(), which detaches (copy-on-write) before
/// handing out a writable span. This keeps tensors cheap to pass by value
/// and safe to read from several threads.
///
/// Scalars are represented with shape {1}.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor();
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor scalar(Real value);
  static Tensor filled(Shape shape, Real value);
  static Tensor matrix(std::initializer_list<std::initializer_list<Real>> rows);
  static Tensor vector(std::initializer_list<Real> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_->size(); }
  /// Extent along axis 0 for rank-2 tensors.
  std::size_t rows() const;
  /// Extent along axis 1 for rank-2 tensors.
  std::size_t cols() const;

  std::span<const Real> values() const noexcept { return {data_->data(), data_->size()}; }
  std::span<Real> mutable_values();

  Real operator[](std::size_t i) const { return (*data_)[i]; }
  Real at(std::size_t row, std::size_t col) const;
  /// The single value of a one-element tensor.
  Real item() const;

  /// Same values under a new shape of equal element count (shares storage).
  Tensor reshaped(Shape shape) const;
  bool all_finite() const noexcept;

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Other>((*data_)[i]);
    return Tensor<Other>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::shared_ptr<std::vector<Real>> data_;
};

/// Bitwise equality of shape and values.
template <typename Real>
bool bit_equal(const Tensor<Real>& a, const Tensor<Real>& b);

/// Largest absolute elementwise difference; shapes must match.
template <typename Real>
Real max_abs_diff(const Tensor<Real>& a, const Tensor<Real>& b);

/// Plain (non-recorded) matrix product, used outside of training graphs.
template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> transpose(const Tensor<Real>& a);

namespace kernels {

/// C = op(A) * op(B), optionally accumulated into C. Row-major throughout.
/// m, n are the extents of C; k is the shared extent.
template <typename Real>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const Real* a,
          const Real* b, Real* c, bool accumulate);

}  // namespace kernels

}  // namespace vlad
