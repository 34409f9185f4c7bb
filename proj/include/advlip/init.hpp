// advlip/init.hpp

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

#ifndef ADVLIP_INIT_HPP_
#define ADVLIP_INIT_HPP_

#include <cmath>
#include <string>

#include "advlip/error.hpp"
#include "advlip/rng.hpp"
#include "advlip/tensor.hpp"

namespace advlip {

/// I.i.d. N(0, stddev^2) samples; draws with |v| > 2 * stddev are redrawn.
template <typename T>
BasicTensor<T> TruncatedNormal(Shape shape, double stddev, Rng& rng) {
  if (!(stddev > 0.0)) {
    throw ConfigError("stddev", "must be positive, got " + std::to_string(stddev));
  }
  BasicTensor<T> out(std::move(shape));
  const double bound = 2.0 * stddev;
  for (T& v : out.values()) {
    double draw;
    do {
      draw = rng.Normal() * stddev;
    } while (std::abs(draw) > bound);
    v = static_cast<T>(draw);
    // Rounding to float can land a hair outside the bound.
    if (std::abs(static_cast<double>(v)) > bound) v = static_cast<T>(draw > 0 ? bound : -bound);
  }
  return out;
}

}  // namespace advlip

#endif  // ADVLIP_INIT_HPP_
