// src/eval.cpp

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

#include "advlip/eval.hpp"

#include <cmath>
#include <limits>

#include "advlip/error.hpp"

namespace advlip {

int PredictWord(const Model<float>& model, const Tensor& frames) {
  // Inference draws nothing from the generator.
  Rng unused(0, RngStream::kDropout);
  ForwardOptions options;
  options.training = false;
  options.speaker_branch = false;
  const auto out = ForwardSequence(model, frames, options, unused);
  return ArgmaxRows(out.word_logits_last).front();
}

EvalReport Evaluate(const Model<float>& model, const std::vector<const FrameSequence*>& sequences) {
  const std::size_t classes = model.config().word_classes;
  EvalReport r;
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  bool same_speaker = true, same_split = true;
  for (const FrameSequence* s : sequences) {
    if (!s->word_label) throw DataError(DataError::Kind::kMalformed, "sequence " + s->id + " is unlabeled");
    const int label = *s->word_label;
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw DataError(DataError::Kind::kMalformed, "sequence " + s->id + " has label out of range");
    }
    const int predicted = PredictWord(model, s->frames);
    r.labels.push_back(label);
    r.predictions.push_back(predicted);
    ++r.confusion[static_cast<std::size_t>(label)][static_cast<std::size_t>(predicted)];
    same_speaker = same_speaker && s->speaker_id == sequences.front()->speaker_id;
    same_split = same_split && s->split == sequences.front()->split;
  }
  r.n = sequences.size();
  std::size_t correct = 0;
  r.per_class_accuracy.assign(classes, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t total = 0;
    for (std::size_t p = 0; p < classes; ++p) total += r.confusion[c][p];
    correct += r.confusion[c][c];
    if (total > 0) r.per_class_accuracy[c] = static_cast<double>(r.confusion[c][c]) / total;
  }
  r.accuracy = r.n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(r.n);
  if (!sequences.empty()) {
    if (same_speaker) r.speaker_id = sequences.front()->speaker_id;
    if (same_split) r.split = sequences.front()->split;
  }
  return r;
}

// ---------------------------------------------------------------- statistics

namespace {

// Continued fraction for I_x(a, b) by the modified Lentz method.
double BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("incomplete_beta", "a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("incomplete_beta", "x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * BetaContinuedFraction(a, b, x) / a;
  return 1.0 - front * BetaContinuedFraction(b, a, 1.0 - x) / b;
}

double StudentTCdf(double t, double df) {
  if (!(df > 0.0)) throw ConfigError("df", "must be positive");
  if (std::isnan(t)) throw NumericalError("t statistic is NaN");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * RegularizedIncompleteBeta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

TTestResult PairedTTestOneTailed(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("t_test", "samples must have equal length");
  if (a.size() < 2) throw ConfigError("t_test", "need at least two pairs");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += b[i] - a[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = (b[i] - a[i]) - mean;
    ss += e * e;
  }
  TTestResult r;
  r.n = n;
  r.mean_difference = mean;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) {
    if (mean > 0.0) {
      r.t = std::numeric_limits<double>::infinity();
      r.p = 0.0;
    } else if (mean < 0.0) {
      r.t = -std::numeric_limits<double>::infinity();
      r.p = 1.0;
    } else {
      r.t = 0.0;
      r.p = 0.5;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = 1.0 - StudentTCdf(r.t, static_cast<double>(n - 1));
  return r;
}

double RelativeImprovement(double base, double updated) {
  if (!(base > 0.0)) throw ConfigError("base", "relative improvement needs a positive base");
  return 100.0 * (updated - base) / base;
}

}  // namespace advlip
