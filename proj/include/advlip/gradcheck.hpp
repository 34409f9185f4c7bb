// advlip/gradcheck.hpp

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

#ifndef ADVLIP_GRADCHECK_HPP_
#define ADVLIP_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <string>

#include "advlip/error.hpp"
#include "advlip/tensor.hpp"

namespace advlip {

/// Central-difference gradient of a scalar function:
///   g[i] = (f(x + eps e_i) - f(x - eps e_i)) / (2 eps)
/// Throws NumericalError if f returns a non-finite value.
template <typename T, typename F>
BasicTensor<T> FiniteDiffGrad(F&& f, const BasicTensor<T>& x, T eps) {
  if (!(eps > T(0))) throw ConfigError("eps", "must be positive");
  BasicTensor<T> probe = x;
  BasicTensor<T> grad(x.shape());
  auto eval = [&](std::size_t i) {
    const T value = static_cast<T>(f(static_cast<const BasicTensor<T>&>(probe)));
    if (!std::isfinite(value)) {
      throw NumericalError("finite difference probe " + std::to_string(i) +
                           " produced a non-finite value");
    }
    return value;
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T saved = probe[i];
    probe[i] = saved + eps;
    const T plus = eval(i);
    probe[i] = saved - eps;
    const T minus = eval(i);
    probe[i] = saved;
    grad[i] = (plus - minus) / (T(2) * eps);
  }
  return grad;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
template <typename T>
T MaxRelativeError(const BasicTensor<T>& a, const BasicTensor<T>& b, T floor = T(1e-6)) {
  if (a.shape() != b.shape()) {
    throw ShapeError("relative error of " + ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
  }
  T worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace advlip

#endif  // ADVLIP_GRADCHECK_HPP_
