// tests/test_training.cpp

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
#include <filesystem>
#include <set>
#include <vector>

#include "doctest.h"

#include "advlip/error.hpp"
#include "advlip/synth.hpp"
#include "advlip/training.hpp"

using namespace advlip;

namespace {

struct SmallSetup {
  Dataset data;
  ModelConfig model;
  TargetPool pool;
  TrainInputs inputs;

  explicit SmallSetup(std::size_t seqs_per_class = 16) {
    SynthConfig sc;
    sc.n_classes = 3;
    sc.seqs_per_class = seqs_per_class;
    sc.eval_per_class = 2;
    sc.height = sc.width = 8;
    sc.path_radius = 2.5;
    sc.blob_sigma = 1.0;
    sc.t_min = 3;
    sc.t_max = 5;
    data = GenerateSynthetic(sc);
    NormalizePerSpeaker(data);
    model.input_height = model.input_width = 8;
    model.trunk_widths = {12, 12, 12};
    model.lstm_units = 10;
    model.word_classes = 3;
    model.adv_widths = {8, 8};
    model.adv_domains = 2;
    pool = TargetPool(data.Select(1, Split::kTrain));
    inputs.source_train = data.Select(0, Split::kTrain);
    inputs.source_val = data.Select(0, Split::kVal);
    inputs.target_val = data.Select(1, Split::kVal);
    inputs.target_pool = &pool;
  }

  Model<float> Init(std::uint64_t seed = 0) const {
    Rng rng(seed, RngStream::kInit);
    return Model<float>::Build(model, rng);
  }
};

TrainConfig FastConfig() {
  TrainConfig c;
  c.learning_rate = 0.02;
  c.adv_epoch_interval = 2;
  c.max_epochs = 6;
  c.batch_source = 4;
  c.batch_target = 4;
  return c;
}

double CombinedLoss(const Model<double>& model, const BatchOutputs<double>& batch,
                    std::span<const double> w) {
  const auto g = BackwardBatch(model, batch, w, BatchMode::kAdversarial);
  return g.word_loss + g.speaker_loss;
}

}  // namespace

TEST_CASE("class weights by hand") {
  const std::vector<int> labels{0, 1, 1, 1};
  const auto exact = ClassWeightsExact(labels, 2);
  CHECK(exact[0] == Rational{4, 2});
  CHECK(exact[1] == Rational{4, 6});
  const auto w = ClassWeights(labels, 2);
  CHECK(w[0] == 2.0);
  CHECK(w[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  const std::vector<int> balanced{0, 1, 2, 0, 1, 2};
  for (double v : ClassWeights(balanced, 3)) CHECK(v == 1.0);

  const std::vector<int> missing{0, 0, 2};
  CHECK_THROWS_AS(ClassWeights(missing, 3), DataError);
}

TEST_CASE("GRID-shaped class weights balance every class mass exactly") {
  // 25 letters x 30, 10 digits x 30, 4 colors / commands / prepositions /
  // adverbs x 240: 51 words.
  std::vector<int> labels;
  std::vector<std::size_t> counts;
  for (int c = 0; c < 51; ++c) {
    const std::size_t n = c < 35 ? 30 : 240;
    counts.push_back(n);
    labels.insert(labels.end(), n, c);
  }
  const auto w = ClassWeightsExact(labels, 51);
  const Rational letter = w[0], color = w[40];
  CHECK(letter.num * color.den == 8 * color.num * letter.den);
  CHECK(ClassWeights(labels, 51)[0] / ClassWeights(labels, 51)[40] == 8.0);
  for (int c = 1; c < 51; ++c) {
    // count_c * w_c == count_0 * w_0, cross-multiplied.
    CHECK(counts[c] * w[c].num * w[0].den == counts[0] * w[0].num * w[c].den);
  }
}

TEST_CASE("staircase examples and exhaustive closed form") {
  const TrainConfig c;
  const std::vector<std::pair<std::size_t, double>> table{
      {0, 0.0}, {9, 0.0}, {10, 0.2}, {20, 0.4}, {30, 0.6},
      {40, 0.8}, {49, 0.8}, {50, 1.0}, {200, 1.0}, {500, 1.0}};
  for (const auto& [epoch, lambda] : table) CHECK(AdversarialWeight(epoch, c) == lambda);
  const double levels[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  for (std::size_t e = 0; e <= 200; ++e) {
    CHECK(AdversarialWeight(e, c) == levels[std::min<std::size_t>(e / 10, 5)]);
  }
}

TEST_CASE("batch composer with a 50-sequence pool") {
  Rng rng(3, RngStream::kShuffle);
  BatchComposer composer(5490, 50, 8, 8, rng);
  const auto batches = composer.NextEpoch();
  CHECK(batches.size() == 686);
  CHECK(composer.dropped_last_epoch() == 2);
  std::set<std::size_t> seen;
  for (const auto& b : batches) {
    CHECK(b.size() == 8);
    seen.insert(b.begin(), b.end());
    CHECK(composer.NextTargets().size() == 8);
  }
  CHECK(seen.size() == 5488);
  for (std::size_t uses : composer.target_uses()) {
    CHECK(uses >= 108);
    CHECK(uses <= 112);
  }
}

TEST_CASE("target pool equal to the batch size") {
  Rng rng(4, RngStream::kShuffle);
  BatchComposer composer(40, 8, 8, 8, rng);
  for (int i = 0; i < 10; ++i) {
    auto t = composer.NextTargets();
    std::sort(t.begin(), t.end());
    CHECK(t == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
  }
  BatchComposer no_targets(10, 0, 8, 8, rng);
  CHECK_THROWS_AS(no_targets.NextTargets(), ConfigError);
  CHECK_THROWS_AS(BatchComposer(0, 8, 8, 8, rng), ConfigError);
}

TEST_CASE("momentum step by hand") {
  ParameterSet<double> params, grads;
  params.Add("w", Tensor64::Vector({1.0}));
  grads.Add("w", Tensor64::Vector({0.5}));
  auto state = OptimizerState<double>::ZerosLike(params);
  MomentumStep(params, grads, state, 0.001, 0.5);
  CHECK(state.accum[0][0] == 0.5);
  CHECK(params[0][0] == doctest::Approx(0.9995).epsilon(1e-15));
  MomentumStep(params, grads, state, 0.001, 0.5);
  CHECK(state.accum[0][0] == 0.75);
  CHECK(params[0][0] == doctest::Approx(0.99875).epsilon(1e-15));

  ParameterSet<double> zero = grads.ZerosLike();
  double previous = state.accum[0][0];
  for (int i = 0; i < 20; ++i) {
    MomentumStep(params, zero, state, 0.001, 0.5);
    CHECK(state.accum[0][0] == previous * 0.5);
    previous = state.accum[0][0];
  }

  grads[0][0] = std::nan("");
  const double before = params[0][0];
  CHECK_THROWS_AS(MomentumStep(params, grads, state, 0.001, 0.5), NumericalError);
  CHECK(params[0][0] == before);
}

TEST_CASE("early stopping trace") {
  EarlyStopping es(30);
  CHECK(es.Update(0, 0.5));
  CHECK(es.Update(1, 0.6));
  std::size_t epoch = 2;
  while (!es.ShouldStop()) {
    CHECK_FALSE(es.Update(epoch, 0.6));
    CHECK(es.best_epoch() == 1);
    ++epoch;
  }
  CHECK(epoch - 1 == 1 + 31);
  CHECK(es.best_metric() == 0.6);
}

TEST_CASE("train honours patience and returns the best checkpoint") {
  SmallSetup s;
  TrainConfig c = FastConfig();
  c.max_epochs = 100;
  c.patience = 30;
  std::vector<Model<float>> snapshots;
  TrainHooks hooks;
  hooks.validation_override = [&](std::size_t epoch, const Model<float>& m) {
    snapshots.push_back(m);
    return epoch == 0 ? 0.5 : 0.6;
  };
  const TrainResult r = Train(s.Init(), s.inputs, c, hooks);
  CHECK(r.best_epoch == 1);
  CHECK(r.best_val_acc == 0.6);
  CHECK(r.early_stopped);
  CHECK(r.log.size() == 1 + 1 + 31);
  CHECK(r.best == snapshots[1]);
  CHECK_FALSE(r.best == snapshots.back());
}

TEST_CASE("best checkpoint never trails the best observed validation accuracy") {
  SmallSetup s;
  TrainConfig c = FastConfig();
  c.max_epochs = 12;
  c.patience = 3;
  const TrainResult r = Train(s.Init(1), s.inputs, c);
  double best = 0.0;
  for (const auto& e : r.log) best = std::max(best, e.src_val_acc);
  CHECK(r.best_val_acc == best);
  CHECK(r.log[r.best_epoch].src_val_acc == best);
}

TEST_CASE("adversarial training never reads target labels") {
  SmallSetup s;
  TrainConfig c = FastConfig();
  c.target_pool_limit = 10;
  const TrainResult r = Train(s.Init(), s.inputs, c);
  CHECK(r.log.size() == c.max_epochs);
  CHECK(s.pool.label_reads() == 0);
  CHECK(r.log.back().lambda == 0.4);
  CHECK(r.log.back().speaker_frame_acc > 0.0);
  // The accessor itself does count.
  (void)s.pool.word_label(0);
  CHECK(s.pool.label_reads() == 1);
}

TEST_CASE("training is deterministic per seed") {
  SmallSetup s;
  const TrainConfig c = FastConfig();
  const TrainResult a = Train(s.Init(), s.inputs, c);
  const TrainResult b = Train(s.Init(), s.inputs, c);
  CHECK(FormatMetricsCsv(a.log) == FormatMetricsCsv(b.log));
  CHECK(a.best == b.best);
  TrainConfig other = c;
  other.seed = 1;
  CHECK_FALSE(FormatMetricsCsv(Train(s.Init(), s.inputs, other).log) == FormatMetricsCsv(a.log));
}

TEST_CASE("metrics csv format") {
  EpochMetrics e;
  e.epoch = 3;
  e.lambda = 0.2;
  e.word_loss = 1.5;
  e.speaker_loss = 0.25;
  e.src_val_acc = 0.875;
  e.tgt_val_acc = std::nan("");
  e.speaker_frame_acc = 0.5;
  CHECK(FormatMetricsCsv({e}) ==
        "epoch,lambda,word_loss,speaker_loss,src_val_acc,tgt_val_acc,speaker_frame_acc\n"
        "3,0.2,1.5,0.25,0.875,nan,0.5\n");
}

TEST_CASE("inconsistent inputs are rejected before training") {
  SmallSetup s;
  TrainConfig c = FastConfig();
  TrainInputs no_pool = s.inputs;
  no_pool.target_pool = nullptr;
  CHECK_THROWS(Train(s.Init(), no_pool, c));
  c.mode = TrainMode::kBaseline;
  CHECK_NOTHROW(Train(s.Init(), no_pool, c));
  TrainConfig bad = FastConfig();
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(Train(s.Init(), s.inputs, bad), ConfigError);
  TrainInputs empty = s.inputs;
  empty.source_val.clear();
  CHECK_THROWS(Train(s.Init(), empty, FastConfig()));
}

TEST_CASE("single-batch descent for small steps") {
  SmallSetup s;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Model<double> start = s.Init(seed).Cast<double>();
    Rng rng(seed, RngStream::kDropout);
    ForwardOptions fo;
    BatchOutputs<double> batch;
    for (std::size_t i = 0; i < 8; ++i) {
      const auto* seq = s.inputs.source_train[(seed * 8 + i) % s.inputs.source_train.size()];
      batch.source.push_back(ForwardSequence(start, seq->frames.Cast<double>(), fo, rng));
      batch.source_labels.push_back(*seq->word_label);
      batch.source_domains.push_back(0);
      batch.target.push_back(ForwardSequence(start, s.pool.frames(i).Cast<double>(), fo, rng));
    }
    batch.target_domain = 1;
    const std::vector<double> w{1.0, 1.0, 1.0};
    const double before = CombinedLoss(start, batch, w);
    for (double lr : {1e-4, 1e-5}) {
      Model<double> m = start;
      auto state = OptimizerState<double>::ZerosLike(m.parameters());
      const auto g = BackwardBatch(m, batch, w, BatchMode::kAdversarial);
      MomentumStep(m.parameters(), g.grads, state, lr, 0.5);
      BatchOutputs<double> again = batch;
      again.source.clear();
      again.target.clear();
      for (std::size_t i = 0; i < 8; ++i) {
        const auto* seq = s.inputs.source_train[(seed * 8 + i) % s.inputs.source_train.size()];
        again.source.push_back(ForwardSequence(m, seq->frames.Cast<double>(), fo, rng));
        again.target.push_back(ForwardSequence(m, s.pool.frames(i).Cast<double>(), fo, rng));
      }
      INFO("seed " << seed << " lr " << lr);
      CHECK(CombinedLoss(m, again, w) <= before);
    }
  }
}

TEST_CASE("baseline on single-domain data learns the word task") {
  SynthConfig sc;
  sc.shift_level = ShiftLevel::kNone;
  Dataset ds = GenerateSynthetic(sc);
  NormalizePerSpeaker(ds);
  ModelConfig mc;
  mc.input_height = mc.input_width = 20;
  mc.trunk_widths = {64, 64, 64};
  mc.lstm_units = 64;
  mc.word_classes = 5;
  TrainConfig tc;
  tc.mode = TrainMode::kBaseline;
  tc.learning_rate = 0.03;
  tc.max_epochs = 25;
  TrainInputs in;
  in.source_train = ds.Select(0, Split::kTrain);
  in.source_val = ds.Select(0, Split::kVal);
  Rng rng(0, RngStream::kInit);
  const TrainResult r = Train(Model<float>::Build(mc, rng), in, tc);
  CHECK(r.best_val_acc > 0.9);
  for (const auto& e : r.log) CHECK(e.lambda == 0.0);
}
