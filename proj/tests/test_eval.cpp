// tests/test_eval.cpp

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

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "doctest.h"

#include "advlip/error.hpp"
#include "advlip/eval.hpp"
#include "advlip/experiment.hpp"
#include "advlip/synth.hpp"
#include "oracle_tables.hpp"

using namespace advlip;

namespace {

// One pixel in, one LSTM cell whose output tracks the current frame only,
// word logits [h, -h].
Model<float> LastFrameModel() {
  ModelConfig c;
  c.input_height = c.input_width = 1;
  c.trunk_widths = {1, 1, 1};
  c.lstm_units = 1;
  c.word_classes = 2;
  c.adv_widths = {1, 1};
  c.adv_domains = 2;
  Model<float> m = Model<float>::Zeros(c);
  for (int l = 0; l < 3; ++l) m.param("trunk." + std::to_string(l) + ".weight")[0] = 1.0f;
  m.param("lstm.w_input") = Tensor::Matrix({{0.0f, 0.0f, 3.0f, 0.0f}});
  m.param("lstm.bias") = Tensor::Vector({20.0f, -20.0f, 0.0f, 20.0f});
  m.param("word.weight") = Tensor::Matrix({{1.0f, -1.0f}});
  return m;
}

Tensor Frames(std::initializer_list<float> values) {
  Tensor t({values.size(), 1, 1});
  std::size_t i = 0;
  for (float v : values) t[i++] = v;
  return t;
}

}  // namespace

TEST_CASE("prediction reads the final frame only") {
  const Model<float> m = LastFrameModel();
  CHECK(PredictWord(m, Frames({1, 1, 1, -1})) == 1);
  CHECK(PredictWord(m, Frames({1, 1, 1})) == 0);
  CHECK(PredictWord(m, Frames({-1, -1, -1, 1})) == 0);
  CHECK(PredictWord(m, Frames({-1})) == 1);
  // Zero input: equal logits, lowest index wins.
  CHECK(PredictWord(m, Frames({1, 0})) == 0);
}

TEST_CASE("evaluation report is consistent with its predictions") {
  SynthConfig sc;
  sc.n_classes = 4;
  sc.seqs_per_class = 20;
  sc.eval_per_class = 3;
  sc.height = sc.width = 6;
  Dataset ds = GenerateSynthetic(sc);
  ModelConfig mc;
  mc.input_height = mc.input_width = 6;
  mc.trunk_widths = {8, 8, 8};
  mc.lstm_units = 8;
  mc.word_classes = 4;
  Rng rng(2, RngStream::kInit);
  const auto model = Model<float>::Build(mc, rng);
  const auto seqs = ds.Select(1);
  const EvalReport r = Evaluate(model, seqs);
  CHECK(r.n == seqs.size());
  CHECK(r.speaker_id == 1);
  CHECK_FALSE(r.split.has_value());
  std::size_t right = 0, total = 0, trace = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    CHECK(r.predictions[i] == PredictWord(model, seqs[i]->frames));
    CHECK(r.labels[i] == *seqs[i]->word_label);
    right += r.labels[i] == r.predictions[i];
  }
  for (std::size_t k = 0; k < 4; ++k) {
    trace += r.confusion[k][k];
    for (std::size_t v : r.confusion[k]) total += v;
  }
  CHECK(total == r.n);
  CHECK(trace == right);
  CHECK(r.accuracy == static_cast<double>(right) / static_cast<double>(r.n));

  const auto test = ds.Select(0, Split::kTest);
  const EvalReport t = Evaluate(model, test);
  CHECK(t.split == Split::kTest);
  CHECK(t.n == 12);

  FrameSequence unlabelled = *test.front();
  unlabelled.word_label.reset();
  CHECK_THROWS_AS(Evaluate(model, {&unlabelled}), DataError);
}

TEST_CASE("random 51-way predictor sits near chance") {
  Rng labels(5, RngStream::kSynth);
  ModelConfig mc;
  mc.input_height = mc.input_width = 2;
  mc.trunk_widths = {4, 4, 4};
  mc.lstm_units = 4;
  Rng rng(3, RngStream::kInit);
  const auto model = Model<float>::Build(mc, rng);
  std::vector<FrameSequence> seqs(2000);
  std::vector<const FrameSequence*> ptrs;
  for (auto& s : seqs) {
    s.frames = Tensor({3, 2, 2});
    for (float& v : s.frames.values()) v = static_cast<float>(labels.Normal());
    s.word_label = static_cast<int>(labels.UniformIndex(51));
    ptrs.push_back(&s);
  }
  // Binomial(2000, 1/51): mean 39.2, sd 6.2; allow four sd either side.
  const double hits = Evaluate(model, ptrs).accuracy * 2000.0;
  CHECK(hits > 39.2 - 4 * 6.2);
  CHECK(hits < 39.2 + 4 * 6.2);
}

TEST_CASE("regularized incomplete beta reference values") {
  CHECK(RegularizedIncompleteBeta(2, 3, 0.4) == doctest::Approx(0.5248).epsilon(1e-13));
  CHECK(RegularizedIncompleteBeta(0.5, 0.5, 0.3) ==
        doctest::Approx(0.36901011956554538).epsilon(1e-12));
  CHECK(RegularizedIncompleteBeta(10, 2.5, 0.9) ==
        doctest::Approx(0.8121862743088557).epsilon(1e-12));
  CHECK(RegularizedIncompleteBeta(3, 4, 0.0) == 0.0);
  CHECK(RegularizedIncompleteBeta(3, 4, 1.0) == 1.0);
}

TEST_CASE("student-t cdf against the oracle table") {
  double worst = 0.0;
  for (const auto& row : oracle::kStudentT) {
    for (std::size_t i = 0; i < row.cdf.size(); ++i) {
      worst = std::max(worst, std::abs(StudentTCdf(oracle::TAt(i), row.df) - row.cdf[i]));
    }
  }
  CHECK(worst < 1e-10);
  CHECK(StudentTCdf(0.0, 7) == 0.5);
}

TEST_CASE("p falls as t grows") {
  for (double df : {1.0, 4.0, 9.0}) {
    double previous = 1.0;
    for (int k = -100; k <= 100; ++k) {
      const double p = 1.0 - StudentTCdf(k * 0.05, df);
      CHECK(p < previous);
      previous = p;
    }
  }
}

TEST_CASE("paired one-tailed t-test examples") {
  const std::vector<double> a{0, 0, 0, 0, 0}, b{1, 2, 3, 4, 5};
  const auto r = PairedTTestOneTailed(a, b);
  CHECK(r.t == doctest::Approx(oracle::kPairedT).epsilon(1e-14));
  CHECK(std::abs(r.p - oracle::kPairedP) < 1e-12);
  CHECK(r.n == 5);
  CHECK(r.mean_difference == 3.0);

  const auto same = PairedTTestOneTailed(b, b);
  CHECK(same.t == 0.0);
  CHECK(same.p == 0.5);

  const std::vector<double> x{0, 0}, up{1, 1}, down{-1, -1};
  CHECK(PairedTTestOneTailed(x, up).p == 0.0);
  CHECK(PairedTTestOneTailed(x, up).t == std::numeric_limits<double>::infinity());
  CHECK(PairedTTestOneTailed(x, down).p == 1.0);

  const std::vector<double> one{1};
  CHECK_THROWS(PairedTTestOneTailed(one, one));
  CHECK_THROWS(PairedTTestOneTailed(a, up));
}

TEST_CASE("t statistic is scale invariant") {
  const std::vector<double> a{0.31, 0.42, 0.28, 0.5, 0.37, 0.44};
  const std::vector<double> b{0.35, 0.47, 0.27, 0.58, 0.45, 0.46};
  const auto base = PairedTTestOneTailed(a, b);
  for (double c : {0.01, 3.0, 1000.0}) {
    std::vector<double> ac, bc;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ac.push_back(0.0);
      bc.push_back(c * (b[i] - a[i]));
    }
    const auto r = PairedTTestOneTailed(ac, bc);
    CHECK(std::abs(r.t - base.t) < 1e-12 * std::abs(base.t));
    CHECK(std::abs(r.p - base.p) < 1e-12);
  }
}

TEST_CASE("relative improvement") {
  CHECK(RelativeImprovement(0.135, 0.192) == doctest::Approx(42.2).epsilon(1e-3));
  CHECK(RelativeImprovement(0.334, 0.378) == doctest::Approx(13.17).epsilon(1e-3));
  CHECK(RelativeImprovement(0.4, 0.4) == 0.0);
  CHECK_THROWS(RelativeImprovement(0.0, 0.5));
}

TEST_CASE("grid enumeration") {
  const std::vector<int> nine{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto grid = EnumerateGrid(nine, 4);
  REQUIRE(grid.size() == 9);
  CHECK(grid.front() == GridCell{{1, 2, 3, 4}, 5});
  CHECK(grid.back() == GridCell{{9, 1, 2, 3}, 4});
  for (std::size_t n : {1u, 4u, 8u}) {
    std::set<int> targets;
    for (const auto& cell : EnumerateGrid(nine, n)) {
      targets.insert(cell.target);
      CHECK(cell.sources.size() == n);
      CHECK(std::find(cell.sources.begin(), cell.sources.end(), cell.target) == cell.sources.end());
    }
    CHECK(targets.size() == 9);
  }
  const auto pair = EnumerateGrid({0, 1}, 1);
  CHECK(pair == std::vector<GridCell>{{{0}, 1}, {{1}, 0}});
  CHECK_THROWS_AS(EnumerateGrid({0, 1}, 2), ConfigError);
}

TEST_CASE("cell seeds depend on the base seed and target only") {
  CHECK(CellSeed(0, 3) == CellSeed(0, 3));
  CHECK(CellSeed(0, 3) != CellSeed(0, 4));
  CHECK(CellSeed(0, 3) != CellSeed(1, 3));
}
