// tests/test_model.cpp

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
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "advlip/error.hpp"
#include "advlip/model.hpp"

using namespace advlip;

namespace {

ModelConfig SmallConfig() {
  ModelConfig c;
  c.input_height = 3;
  c.input_width = 3;
  c.trunk_widths = {6, 6, 6};
  c.lstm_units = 5;
  c.word_classes = 3;
  c.adv_widths = {4, 4};
  c.adv_domains = 3;
  c.init_stddev = 0.5;
  return c;
}

Tensor64 RandomFrames(std::size_t t, const ModelConfig& c, Rng& rng) {
  Tensor64 x({t, c.input_height, c.input_width});
  for (double& v : x.values()) v = rng.Normal();
  return x;
}

struct Fixture {
  ModelConfig config = SmallConfig();
  Model<double> model;
  std::vector<Tensor64> source, target;
  std::vector<int> labels{0, 2, 1};
  std::vector<int> domains{0, 1, 0};
  std::vector<double> class_weights{1.0, 1.0, 1.0};

  explicit Fixture(std::uint64_t seed) : model(Build(seed)) {
    Rng rng(seed, RngStream::kSynth);
    for (std::size_t i = 0; i < 3; ++i) source.push_back(RandomFrames(2 + i, config, rng));
    for (std::size_t i = 0; i < 2; ++i) target.push_back(RandomFrames(3 + i, config, rng));
  }

  Model<double> Build(std::uint64_t seed) {
    Rng rng(seed, RngStream::kInit);
    return Model<float>::Build(config, rng).Cast<double>();
  }

  BatchOutputs<double> Forward(const Model<double>& m, double lambda, bool branch = true,
                               bool with_target = true) const {
    Rng rng(0, RngStream::kDropout);
    ForwardOptions options;
    options.lambda = lambda;
    options.speaker_branch = branch;
    BatchOutputs<double> batch;
    for (const auto& x : source) batch.source.push_back(ForwardSequence(m, x, options, rng));
    batch.source_labels = labels;
    batch.source_domains = domains;
    if (with_target) {
      for (const auto& x : target) batch.target.push_back(ForwardSequence(m, x, options, rng));
      batch.target_domain = 2;
    }
    return batch;
  }

  BatchGradients<double> Grads(const Model<double>& m, double lambda, BatchMode mode,
                               bool with_target = true) const {
    return BackwardBatch(m, Forward(m, lambda, mode != BatchMode::kWordOnly, with_target),
                         class_weights, mode);
  }
};

bool IsTrunk(const std::string& name) { return name.rfind("trunk.", 0) == 0; }
bool IsSpeaker(const std::string& name) { return name.rfind("speaker.", 0) == 0; }

}  // namespace

TEST_CASE("default model parameter count") {
  Rng rng(1, RngStream::kInit);
  const auto model = Model<float>::Build(ModelConfig{}, rng);
  // trunk 1600*256+256 + 2*(256*256+256); lstm 2*256*1024+1024; word 256*51+51;
  // speaker 256*100+100 + 100*100+100 + 100*2+2
  CHECK(model.parameters().ScalarCount() == 1115861u);
  CHECK(model.parameters().size() == 17u);
}

TEST_CASE("build is deterministic and sets the forget-gate bias") {
  const ModelConfig config = SmallConfig();
  Rng a(7, RngStream::kInit), b(7, RngStream::kInit), c(8, RngStream::kInit);
  const auto ma = Model<float>::Build(config, a);
  CHECK(ma == Model<float>::Build(config, b));
  CHECK_FALSE(ma == Model<float>::Build(config, c));
  const Tensor& bias = ma.param("lstm.bias");
  for (std::size_t j = 0; j < bias.size(); ++j) {
    const bool forget = j >= config.lstm_units && j < 2 * config.lstm_units;
    CHECK(bias[j] == (forget ? 1.0f : 0.0f));
  }
  CHECK(ma.param("trunk.0.bias") == Tensor({6}));
}

TEST_CASE("config validation names the field") {
  ModelConfig c = SmallConfig();
  c.adv_attach_index = 4;
  try {
    c.Validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("adv_attach_index") != std::string::npos);
  }
  c = SmallConfig();
  c.adv_domains = 1;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
}

TEST_CASE("forward shapes, single-frame sequences and inference determinism") {
  Fixture f(3);
  Rng rng(0, RngStream::kDropout);
  for (std::size_t t : {1u, 4u}) {
    const auto x = RandomFrames(t, f.config, rng);
    const auto out = ForwardSequence(f.model, x, ForwardOptions{}, rng);
    CHECK(out.length == t);
    CHECK(out.word_logits_last.shape() == Shape{1, 3});
    CHECK(out.speaker_logits.shape() == Shape{t, 3});
    CHECK(ForwardSequence(f.model, x, ForwardOptions{}, rng).word_logits_last ==
          out.word_logits_last);
  }
  CHECK_THROWS_AS(ForwardSequence(f.model, Tensor64({0, 9}), ForwardOptions{}, rng), ShapeError);
  CHECK_THROWS_AS(ForwardSequence(f.model, Tensor64({2, 8}), ForwardOptions{}, rng), ShapeError);
}

TEST_CASE("lambda zero leaves trunk gradients equal to the word-only model") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Fixture f(seed);
    const auto word = f.Grads(f.model, 0.0, BatchMode::kWordOnly);
    const auto adv = f.Grads(f.model, 0.0, BatchMode::kAdversarial);
    const auto& p = f.model.parameters();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (IsSpeaker(p.name(i))) continue;
      INFO(p.name(i));
      const auto& a = word.grads[i].values();
      const auto& b = adv.grads[i].values();
      for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
    }
    CHECK(adv.speaker_loss > 0.0);
    CHECK(word.speaker_loss == 0.0);
  }
}

TEST_CASE("target sequences never reach the word head") {
  Fixture f(4);
  const auto word = f.Grads(f.model, 0.6, BatchMode::kWordOnly);
  const auto adv = f.Grads(f.model, 0.6, BatchMode::kAdversarial);
  Fixture g(4);
  for (auto& x : g.target) {
    for (double& v : x.values()) v = -3.0 * v + 1.0;
  }
  const auto moved = g.Grads(g.model, 0.6, BatchMode::kAdversarial);
  const auto& p = f.model.parameters();
  for (const char* name : {"word.weight", "word.bias", "lstm.w_input", "lstm.w_recurrent",
                           "lstm.bias", "trunk.2.weight"}) {
    INFO(name);
    const std::size_t i = *p.Find(name);
    CHECK(adv.grads[i] == word.grads[i]);
    CHECK(moved.grads[i] == adv.grads[i]);
  }
  CHECK(adv.word_loss == word.word_loss);
  CHECK(adv.speaker_frames == 2 + 3 + 4 + 3 + 4);
  CHECK(moved.speaker_loss != adv.speaker_loss);
}

TEST_CASE("speaker head descends on the speaker loss while the trunk ascends") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Fixture f(seed);
    const double lambda = 1.0, step = 1e-3;
    const auto g = f.Grads(f.model, lambda, BatchMode::kSpeakerOnly);
    const double base = g.speaker_loss;
    const auto& p = f.model.parameters();

    Model<double> head = f.model, trunk = f.model;
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto hv = head.parameters()[i].values();
      auto tv = trunk.parameters()[i].values();
      const auto& gv = g.grads[i].values();
      for (std::size_t k = 0; k < gv.size(); ++k) {
        if (IsSpeaker(p.name(i))) hv[k] -= step * gv[k];
        if (IsTrunk(p.name(i))) tv[k] -= step * gv[k];
      }
    }
    INFO("seed " << seed);
    CHECK(f.Grads(head, lambda, BatchMode::kSpeakerOnly).speaker_loss < base);
    CHECK(f.Grads(trunk, lambda, BatchMode::kSpeakerOnly).speaker_loss > base);
  }
}

TEST_CASE("reversal scales the trunk gradient linearly in lambda") {
  Fixture f(5);
  const auto g1 = f.Grads(f.model, 1.0, BatchMode::kSpeakerOnly);
  const auto g2 = f.Grads(f.model, 0.2, BatchMode::kSpeakerOnly);
  const auto& p = f.model.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = g1.grads[i].values();
    const auto& b = g2.grads[i].values();
    const double scale = IsTrunk(p.name(i)) ? 0.2 : 1.0;
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == doctest::Approx(scale * a[k]).epsilon(1e-12));
  }
}

TEST_CASE("checkpoint round trip is bit exact and canonical") {
  Rng rng(9, RngStream::kInit);
  const auto model = Model<float>::Build(SmallConfig(), rng);
  std::stringstream first;
  WriteCheckpoint(first, model);
  const auto loaded = ReadCheckpoint(first);
  CHECK(loaded == model);
  std::stringstream second;
  WriteCheckpoint(second, loaded);
  CHECK(first.str() == second.str());
}

TEST_CASE("checkpoint errors are distinct") {
  Rng rng(9, RngStream::kInit);
  const auto model = Model<float>::Build(SmallConfig(), rng);
  std::stringstream ss;
  WriteCheckpoint(ss, model);
  const std::string bytes = ss.str();

  auto kind_of = [](const std::string& data) {
    std::stringstream in(data);
    try {
      ReadCheckpoint(in);
    } catch (const DataError& e) {
      return e.kind();
    }
    FAIL("expected DataError");
    return DataError::Kind::kIo;
  };
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK(kind_of(bad) == DataError::Kind::kBadMagic);
  CHECK(kind_of(bytes.substr(0, bytes.size() - 3)) == DataError::Kind::kTruncated);
  CHECK(kind_of(bytes.substr(0, 14)) == DataError::Kind::kTruncated);

  // A config that disagrees with the stored tensors.
  ModelConfig other = SmallConfig();
  other.lstm_units = 6;
  Rng rng2(9, RngStream::kInit);
  std::stringstream mismatched;
  WriteCheckpoint(mismatched, Model<float>::Build(other, rng2));
  std::string spliced = mismatched.str();
  const auto cut = [](const std::string& s) {
    std::uint32_t len = 0;
    std::memcpy(&len, s.data() + 8, 4);
    return 12 + static_cast<std::size_t>(len);
  };
  spliced = bytes.substr(0, cut(bytes)) + spliced.substr(cut(spliced));
  CHECK(kind_of(spliced) == DataError::Kind::kIntegrity);

  CHECK_THROWS_AS(LoadCheckpoint("/nonexistent/advlip.ckpt"), DataError);
}
