// src/tensor.cpp

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

#include "advlip/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "advlip/binary_io.hpp"
#include "advlip/error.hpp"

namespace advlip {

namespace {

constexpr std::string_view kTensorMagic = "ADVT1";

std::size_t ShapeProduct(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void CheckShape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have rank >= 1");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + ShapeToString(shape));
  }
}

template <typename T>
using EigenRowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void RequireRank2(const BasicTensor<T>& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got " +
                     ShapeToString(t.shape()));
  }
}

}  // namespace

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
  CheckShape(shape_);
  data_.assign(ShapeProduct(shape_), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  CheckShape(shape_);
  if (data_.size() != ShapeProduct(shape_)) {
    throw ShapeError("value count " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeToString(shape_));
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Matrix(std::initializer_list<std::initializer_list<T>> rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows ? rows.begin()->size() : 0;
  std::vector<T> values;
  values.reserve(n_rows * n_cols);
  for (const auto& r : rows) {
    if (r.size() != n_cols) throw ShapeError("ragged matrix literal");
    values.insert(values.end(), r.begin(), r.end());
  }
  return BasicTensor({n_rows, n_cols}, std::move(values));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Vector(std::initializer_list<T> values) {
  return BasicTensor({values.size()}, std::vector<T>(values));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Identity(std::size_t n) {
  BasicTensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out.at(i, i) = T(1);
  return out;
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     ShapeToString(shape_));
  }
  return shape_[axis];
}

template <typename T>
std::size_t BasicTensor<T>::rows() const {
  RequireRank2(*this, "rows");
  return shape_[0];
}

template <typename T>
std::size_t BasicTensor<T>::cols() const {
  RequireRank2(*this, "cols");
  return shape_[1];
}

template <typename T>
std::span<T> BasicTensor<T>::row(std::size_t i) {
  const std::size_t stride = data_.size() / shape_.at(0);
  return std::span<T>(data_).subspan(i * stride, stride);
}

template <typename T>
std::span<const T> BasicTensor<T>::row(std::size_t i) const {
  const std::size_t stride = data_.size() / shape_.at(0);
  return std::span<const T>(data_).subspan(i * stride, stride);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Reshaped(Shape shape) const& {
  return BasicTensor(*this).Reshaped(std::move(shape));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Reshaped(Shape shape) && {
  if (ShapeProduct(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + ShapeToString(shape_) + " to " + ShapeToString(shape));
  }
  return BasicTensor(std::move(shape), std::move(data_));
}

template <typename T>
void BasicTensor<T>::Fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::operator+=(const BasicTensor& other) {
  if (other.shape_ != shape_) {
    throw ShapeError("elementwise add of " + ShapeToString(shape_) + " and " +
                     ShapeToString(other.shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::operator*=(T scale) {
  for (T& v : data_) v *= scale;
  return *this;
}

template <typename T>
ConstMatrixView<T> AsMatrix(const BasicTensor<T>& t) {
  RequireRank2(t, "AsMatrix");
  return {t.data(), t.rows(), t.cols()};
}

template <typename T>
MatrixView<T> AsMatrix(BasicTensor<T>& t) {
  RequireRank2(t, "AsMatrix");
  return {t.data(), t.rows(), t.cols()};
}

template <typename T>
ConstMatrixView<T> RowAsMatrix(const BasicTensor<T>& t, std::size_t r) {
  RequireRank2(t, "RowAsMatrix");
  return {t.data() + r * t.cols(), 1, t.cols()};
}

template <typename T>
void Gemm(ConstMatrixView<T> a, Transpose ta, ConstMatrixView<T> b, Transpose tb,
          MatrixView<T> c, bool accumulate) {
  using Map = Eigen::Map<const EigenRowMajor<T>>;
  Map ma(a.data, static_cast<Eigen::Index>(a.rows), static_cast<Eigen::Index>(a.cols));
  Map mb(b.data, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
  Eigen::Map<EigenRowMajor<T>> mc(c.data, static_cast<Eigen::Index>(c.rows),
                                  static_cast<Eigen::Index>(c.cols));
  const std::size_t m = ta == Transpose::kNo ? a.rows : a.cols;
  const std::size_t k = ta == Transpose::kNo ? a.cols : a.rows;
  const std::size_t kb = tb == Transpose::kNo ? b.rows : b.cols;
  const std::size_t n = tb == Transpose::kNo ? b.cols : b.rows;
  if (k != kb || c.rows != m || c.cols != n) {
    throw ShapeError("gemm: incompatible operands");
  }
  if (!accumulate) mc.setZero();
  if (ta == Transpose::kNo && tb == Transpose::kNo) {
    mc.noalias() += ma * mb;
  } else if (ta == Transpose::kYes && tb == Transpose::kNo) {
    mc.noalias() += ma.transpose() * mb;
  } else if (ta == Transpose::kNo && tb == Transpose::kYes) {
    mc.noalias() += ma * mb.transpose();
  } else {
    mc.noalias() += ma.transpose() * mb.transpose();
  }
}

template <typename T>
BasicTensor<T> MatMul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + ShapeToString(a.shape()) + " x " +
                     ShapeToString(b.shape()));
  }
  BasicTensor<T> c({a.rows(), b.cols()});
  Gemm(AsMatrix(a), Transpose::kNo, AsMatrix(b), Transpose::kNo, AsMatrix(c), false);
  return c;
}

template <typename T>
BasicTensor<T> MatMulTransA(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
    throw ShapeError("matmul(a^T, b): shape mismatch " + ShapeToString(a.shape()) + " x " +
                     ShapeToString(b.shape()));
  }
  BasicTensor<T> c({a.cols(), b.cols()});
  Gemm(AsMatrix(a), Transpose::kYes, AsMatrix(b), Transpose::kNo, AsMatrix(c), false);
  return c;
}

template <typename T>
BasicTensor<T> MatMulTransB(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
    throw ShapeError("matmul(a, b^T): shape mismatch " + ShapeToString(a.shape()) + " x " +
                     ShapeToString(b.shape()));
  }
  BasicTensor<T> c({a.rows(), b.rows()});
  Gemm(AsMatrix(a), Transpose::kNo, AsMatrix(b), Transpose::kYes, AsMatrix(c), false);
  return c;
}

template <typename T>
void AddRowBroadcast(BasicTensor<T>& y, const BasicTensor<T>& bias) {
  if (y.rank() != 2 || bias.size() != y.cols()) {
    throw ShapeError("bias add: " + ShapeToString(bias.shape()) + " onto " +
                     ShapeToString(y.shape()));
  }
  const std::size_t n = y.cols();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    T* row = y.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) row[c] += bias[c];
  }
}

template <typename T>
BasicTensor<T> ColumnSums(const BasicTensor<T>& x) {
  RequireRank2(x, "ColumnSums");
  BasicTensor<T> out({x.cols()});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const T* row = x.data() + r * x.cols();
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += row[c];
  }
  return out;
}

template <typename T>
bool AllFinite(const BasicTensor<T>& x) {
  return std::all_of(x.values().begin(), x.values().end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
T MaxAbs(const BasicTensor<T>& x) {
  T m = 0;
  for (T v : x.values()) m = std::max(m, std::abs(v));
  return m;
}

void WriteTensor(std::ostream& os, const Tensor& t) {
  if (t.rank() == 0 || t.rank() > 255) throw ShapeError("cannot serialize tensor of rank " + std::to_string(t.rank()));
  os.write(kTensorMagic.data(), kTensorMagic.size());
  binary::WriteLe<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) binary::WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (float v : t.values()) binary::WriteF32(os, v);
}

Tensor ReadTensor(std::istream& is) {
  binary::ExpectMagic(is, kTensorMagic);
  const auto rank = binary::ReadLe<std::uint8_t>(is, "tensor rank");
  if (rank == 0) throw DataError(DataError::Kind::kMalformed, "tensor record with rank 0");
  Shape shape(rank);
  for (auto& d : shape) {
    d = binary::ReadLe<std::uint32_t>(is, "tensor dims");
    if (d == 0) throw DataError(DataError::Kind::kMalformed, "tensor record with zero dimension");
  }
  std::vector<float> values(ShapeProduct(shape));
  for (float& v : values) v = binary::ReadF32(is, "tensor values");
  return Tensor(std::move(shape), std::move(values));
}

#define ADVLIP_INSTANTIATE_TENSOR(T)                                                        \
  template class BasicTensor<T>;                                                            \
  template ConstMatrixView<T> AsMatrix(const BasicTensor<T>&);                              \
  template MatrixView<T> AsMatrix(BasicTensor<T>&);                                         \
  template ConstMatrixView<T> RowAsMatrix(const BasicTensor<T>&, std::size_t);              \
  template void Gemm(ConstMatrixView<T>, Transpose, ConstMatrixView<T>, Transpose,          \
                     MatrixView<T>, bool);                                                  \
  template BasicTensor<T> MatMul(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> MatMulTransA(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template BasicTensor<T> MatMulTransB(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template void AddRowBroadcast(BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> ColumnSums(const BasicTensor<T>&);                                \
  template bool AllFinite(const BasicTensor<T>&);                                           \
  template T MaxAbs(const BasicTensor<T>&);

ADVLIP_INSTANTIATE_TENSOR(float)
ADVLIP_INSTANTIATE_TENSOR(double)

#undef ADVLIP_INSTANTIATE_TENSOR

}  // namespace advlip
