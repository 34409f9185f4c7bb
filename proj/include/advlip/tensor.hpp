// advlip/tensor.hpp

// Copyright 2026 The advlip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ADVLIP_TENSOR_HPP_
#define ADVLIP_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace advlip {

using Shape = std::vector<std::size_t>;

std::string ShapeToString(const Shape& shape);

/// Dense row-major array with an explicit shape. Every dimension is positive;
/// a default-constructed tensor is the rank-0 empty placeholder.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0));
  BasicTensor(Shape shape, std::vector<T> values);

  /// Rank-2 tensor from nested rows, e.g. Matrix({{1, 2}, {3, 4}}).
  static BasicTensor Matrix(std::initializer_list<std::initializer_list<T>> rows);
  static BasicTensor Vector(std::initializer_list<T> values);
  static BasicTensor Identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t dim(std::size_t axis) const;
  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t r, std::size_t c) { return data_[r * shape_.back() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * shape_.back() + c]; }

  /// Slice `i` along the leading axis.
  std::span<T> row(std::size_t i);
  std::span<const T> row(std::size_t i) const;

  /// Same values under a new shape with equal element count.
  BasicTensor Reshaped(Shape shape) const&;
  BasicTensor Reshaped(Shape shape) &&;

  template <typename U>
  BasicTensor<U> Cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  void Fill(T value);
  BasicTensor& operator+=(const BasicTensor& other);
  BasicTensor& operator*=(T scale);

  bool operator==(const BasicTensor& other) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

template <typename T>
struct MatrixView {
  T* data;
  std::size_t rows;
  std::size_t cols;
};

template <typename T>
struct ConstMatrixView {
  const T* data;
  std::size_t rows;
  std::size_t cols;
};

template <typename T>
ConstMatrixView<T> AsMatrix(const BasicTensor<T>& t);
template <typename T>
MatrixView<T> AsMatrix(BasicTensor<T>& t);
/// One row of a rank-2 tensor as a 1 x cols matrix.
template <typename T>
ConstMatrixView<T> RowAsMatrix(const BasicTensor<T>& t, std::size_t r);

enum class Transpose { kNo, kYes };

/// c = op(a) * op(b), or c += op(a) * op(b) when `accumulate` is set.
/// Summation order is fixed for a given build.
template <typename T>
void Gemm(ConstMatrixView<T> a, Transpose ta, ConstMatrixView<T> b, Transpose tb,
          MatrixView<T> c, bool accumulate);

/// Standard matrix product; throws ShapeError naming both shapes.
template <typename T>
BasicTensor<T> MatMul(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// a^T * b
template <typename T>
BasicTensor<T> MatMulTransA(const BasicTensor<T>& a, const BasicTensor<T>& b);
/// a * b^T
template <typename T>
BasicTensor<T> MatMulTransB(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// y[r, :] += bias for every row r.
template <typename T>
void AddRowBroadcast(BasicTensor<T>& y, const BasicTensor<T>& bias);

/// Sum over rows of a rank-2 tensor; result has shape {cols}.
template <typename T>
BasicTensor<T> ColumnSums(const BasicTensor<T>& x);

template <typename T>
bool AllFinite(const BasicTensor<T>& x);

template <typename T>
T MaxAbs(const BasicTensor<T>& x);

/// Binary tensor record: "ADVT1", u8 rank, u32 dims, f32 values; all
/// little-endian.
void WriteTensor(std::ostream& os, const Tensor& t);
Tensor ReadTensor(std::istream& is);

}  // namespace advlip

#endif  // ADVLIP_TENSOR_HPP_
