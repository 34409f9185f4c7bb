// advlip/eval.hpp

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

#ifndef ADVLIP_EVAL_HPP_
#define ADVLIP_EVAL_HPP_

#include <optional>
#include <span>
#include <vector>

#include "advlip/data.hpp"
#include "advlip/model.hpp"

namespace advlip {

/// Word prediction for one sequence: argmax of the final frame's word
/// logits in inference mode, ties to the lowest class index.
int PredictWord(const Model<float>& model, const Tensor& frames);

struct EvalReport {
  double accuracy = 0.0;
  // NaN for classes that do not occur in the evaluated set.
  std::vector<double> per_class_accuracy;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t n = 0;
  std::optional<int> speaker_id;  // unset when several speakers are pooled
  std::optional<Split> split;
  std::vector<int> labels;
  std::vector<int> predictions;
};

/// Throws DataError if a sequence has no label.
EvalReport Evaluate(const Model<float>& model, const std::vector<const FrameSequence*>& sequences);

// ---------------------------------------------------------------- statistics

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double RegularizedIncompleteBeta(double a, double b, double x);

/// CDF of Student's t distribution with `df` degrees of freedom.
double StudentTCdf(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 0.0;
  double mean_difference = 0.0;
  std::size_t n = 0;
};

/// One-tailed paired t-test of "b > a" on d = b - a: t = mean(d) / (s / sqrt(n))
/// with the n - 1 standard deviation, p = 1 - CDF_t(t; n - 1). When d has
/// zero variance, p is 0, 1 or 0.5 for positive, negative or zero mean and
/// t is +inf, -inf or 0.
TTestResult PairedTTestOneTailed(std::span<const double> a, std::span<const double> b);

/// 100 * (updated - base) / base; base must be positive.
double RelativeImprovement(double base, double updated);

}  // namespace advlip

#endif  // ADVLIP_EVAL_HPP_
