// advlip/gradcheck_suite.hpp

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

#ifndef ADVLIP_GRADCHECK_SUITE_HPP_
#define ADVLIP_GRADCHECK_SUITE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "advlip/model.hpp"

namespace advlip {

/// 2x2 frames, trunk 3x3, LSTM 3, 2 words, 2 domains.
ModelConfig TinyModelConfig();

struct GradCheckOptions {
  std::size_t seeds = 10;
  std::uint64_t base_seed = 1234;
  double tolerance = 1e-4;
  double eps = 1e-5;
  // Scale of the reversed speaker gradient in the full-model check.
  double lambda = 0.6;
  // Negative control: flips the sign of the gradient reversal on the
  // analytic side, which the checks must catch.
  bool inject_sign_bug = false;
  // Network for the full-model check.
  ModelConfig model = TinyModelConfig();
};

struct GradCheckResult {
  std::string check;
  std::size_t cases = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Compares every backward pass (64-bit) against central differences and
/// returns one row per layer plus one for the full tiny model.
std::vector<GradCheckResult> RunGradientChecks(const GradCheckOptions& options);

}  // namespace advlip

#endif  // ADVLIP_GRADCHECK_SUITE_HPP_
