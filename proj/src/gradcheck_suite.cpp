// src/gradcheck_suite.cpp

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

#include "advlip/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>

#include "advlip/gradcheck.hpp"
#include "advlip/layers.hpp"

namespace advlip {

namespace {

using T64 = Tensor64;

T64 RandomTensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  T64 t(shape);
  for (double& v : t.values()) v = scale * rng.Normal();
  return t;
}

double Dot(const T64& a, const T64& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Tracks the worst error of one named check across cases.
class Tally {
 public:
  Tally(std::string name, const GradCheckOptions& options) : options_(options) {
    result_.check = std::move(name);
  }

  void Compare(const T64& analytic, const T64& numeric) {
    result_.max_rel_error =
        std::max(result_.max_rel_error, MaxRelativeError(analytic, numeric, kFloor));
  }
  void NextCase() { ++result_.cases; }

  GradCheckResult Finish() {
    result_.passed = result_.max_rel_error < options_.tolerance;
    return result_;
  }

 private:
  // Gradients below this magnitude are compared in absolute terms.
  static constexpr double kFloor = 1e-6;
  const GradCheckOptions& options_;
  GradCheckResult result_;
};

// Numerical gradient of f with respect to `target`, which f reads by
// reference; each probe mutates it in place.
T64 Numeric(const std::function<double()>& f, T64& target, double eps) {
  const T64 original = target;
  T64 grad = FiniteDiffGrad<double>(
      [&](const T64& probe) {
        target = probe;
        return f();
      },
      original, eps);
  target = original;
  return grad;
}

GradCheckResult CheckDense(const GradCheckOptions& o) {
  Tally tally("dense", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(o.base_seed + s, RngStream::kInit, 1);
    T64 x = RandomTensor({3, 4}, rng), w = RandomTensor({4, 2}, rng), b = RandomTensor({2}, rng);
    const T64 r = RandomTensor({3, 2}, rng);
    auto f = [&] { return Dot(DenseForward(x, w, b).output, r); };
    const auto fwd = DenseForward(x, w, b);
    const auto g = DenseBackward(r, fwd.cache, w);
    tally.Compare(g.d_input, Numeric(f, x, o.eps));
    tally.Compare(g.d_weight, Numeric(f, w, o.eps));
    tally.Compare(g.d_bias, Numeric(f, b, o.eps));
    tally.NextCase();
  }
  return tally.Finish();
}

GradCheckResult CheckTanh(const GradCheckOptions& o) {
  Tally tally("tanh", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(o.base_seed + s, RngStream::kInit, 2);
    T64 x = RandomTensor({3, 4}, rng, 1.5);
    const T64 r = RandomTensor({3, 4}, rng);
    auto f = [&] { return Dot(TanhForward(x).output, r); };
    const auto fwd = TanhForward(x);
    tally.Compare(TanhBackward(r, fwd.cache), Numeric(f, x, o.eps));
    tally.NextCase();
  }
  return tally.Finish();
}

GradCheckResult CheckDropout(const GradCheckOptions& o) {
  Tally tally("dropout", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(o.base_seed + s, RngStream::kInit, 3);
    T64 x = RandomTensor({4, 5}, rng);
    const T64 r = RandomTensor({4, 5}, rng);
    // Re-seeding reproduces the same mask on every probe.
    auto forward = [&] {
      Rng mask_rng(o.base_seed + s, RngStream::kDropout);
      return DropoutForward(x, 0.5, true, mask_rng);
    };
    auto f = [&] { return Dot(forward().output, r); };
    const auto fwd = forward();
    tally.Compare(DropoutBackward(r, fwd.cache), Numeric(f, x, o.eps));
    tally.NextCase();
  }
  return tally.Finish();
}

GradCheckResult CheckLstmStep(const GradCheckOptions& o) {
  Tally tally("lstm_step", o);
  const std::size_t in = 4, units = 3, batch = 2;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(o.base_seed + s, RngStream::kInit, 4);
    T64 x = RandomTensor({batch, in}, rng);
    T64 h = RandomTensor({batch, units}, rng, 0.5), c = RandomTensor({batch, units}, rng, 0.5);
    T64 wx = RandomTensor({in, 4 * units}, rng, 0.5);
    T64 wh = RandomTensor({units, 4 * units}, rng, 0.5);
    T64 b = RandomTensor({4 * units}, rng, 0.5);
    const T64 rh = RandomTensor({batch, units}, rng), rc = RandomTensor({batch, units}, rng);
    auto run = [&] { return LstmStep(x, LstmState<double>{h, c}, LstmParams<double>{wx, wh, b}); };
    auto f = [&] {
      const auto out = run();
      return Dot(out.state.h, rh) + Dot(out.state.c, rc);
    };
    const auto fwd = run();
    const auto g = LstmStepBackward(rh, rc, fwd.cache, LstmParams<double>{wx, wh, b});
    tally.Compare(g.d_input, Numeric(f, x, o.eps));
    tally.Compare(g.d_h_prev, Numeric(f, h, o.eps));
    tally.Compare(g.d_c_prev, Numeric(f, c, o.eps));
    tally.Compare(g.params.d_w_input, Numeric(f, wx, o.eps));
    tally.Compare(g.params.d_w_recurrent, Numeric(f, wh, o.eps));
    tally.Compare(g.params.d_bias, Numeric(f, b, o.eps));
    tally.NextCase();
  }
  return tally.Finish();
}

GradCheckResult CheckLstmSequence(const GradCheckOptions& o) {
  Tally tally("lstm_bptt", o);
  const std::size_t in = 4, units = 3, steps = 3;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(o.base_seed + s, RngStream::kInit, 5);
    T64 x = RandomTensor({steps, in}, rng);
    T64 wx = RandomTensor({in, 4 * units}, rng, 0.5);
    T64 wh = RandomTensor({units, 4 * units}, rng, 0.5);
    T64 b = RandomTensor({4 * units}, rng, 0.5);
    const T64 r = RandomTensor({steps, units}, rng);
    auto f = [&] { return Dot(LstmForwardSequence(x, LstmParams<double>{wx, wh, b}).hidden, r); };
    const auto fwd = LstmForwardSequence(x, LstmParams<double>{wx, wh, b});
    const auto g = LstmBackwardSequence(r, fwd.cache, LstmParams<double>{wx, wh, b});
    tally.Compare(g.d_inputs, Numeric(f, x, o.eps));
    tally.Compare(g.params.d_w_input, Numeric(f, wx, o.eps));
    tally.Compare(g.params.d_w_recurrent, Numeric(f, wh, o.eps));
    tally.Compare(g.params.d_bias, Numeric(f, b, o.eps));
    tally.NextCase();
  }
  return tally.Finish();
}

GradCheckResult CheckSoftmaxCe(const GradCheckOptions& o) {
  Tally tally("softmax_ce", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(o.base_seed + s, RngStream::kInit, 6);
    T64 logits = RandomTensor({4, 3}, rng, 2.0);
    std::vector<int> labels(4);
    std::vector<double> weights(4);
    for (std::size_t i = 0; i < 4; ++i) {
      labels[i] = static_cast<int>(rng.UniformIndex(3));
      weights[i] = 0.25 + rng.Uniform();
    }
    auto run = [&] {
      return WeightedSoftmaxCrossEntropy(logits, std::span<const int>(labels),
                                         std::span<const double>(weights));
    };
    auto f = [&] { return run().loss; };
    tally.Compare(run().d_logits, Numeric(f, logits, o.eps));
    tally.NextCase();
  }
  return tally.Finish();
}

GradCheckResult CheckGradientReversal(const GradCheckOptions& o) {
  Tally tally("gradient_reversal", o);
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng rng(o.base_seed + s, RngStream::kInit, 7);
    T64 x = RandomTensor({3, 4}, rng);
    const T64 r = RandomTensor({3, 4}, rng);
    auto f = [&] { return Dot(GradientReversalForward(x), r); };
    // The forward map is the identity, so the numerical gradient of the
    // upstream loss is r; the reversal must hand back -lambda times it.
    T64 expected = Numeric(f, x, o.eps);
    expected *= -o.lambda;
    T64 analytic = GradientReversalBackward(r, o.lambda);
    if (o.inject_sign_bug) analytic *= -1.0;
    tally.Compare(analytic, expected);
    tally.NextCase();
  }
  return tally.Finish();
}

struct TinyBatch {
  std::vector<T64> source, target;
  std::vector<int> labels, source_domains;
};

TinyBatch MakeTinyBatch(const ModelConfig& config, Rng& rng) {
  TinyBatch b;
  auto frames = [&] {
    const std::size_t steps = 1 + rng.UniformIndex(4);
    return RandomTensor({steps, config.input_height, config.input_width}, rng);
  };
  for (int i = 0; i < 2; ++i) {
    b.source.push_back(frames());
    b.labels.push_back(i % static_cast<int>(config.word_classes));
    b.source_domains.push_back(0);
  }
  for (int i = 0; i < 2; ++i) b.target.push_back(frames());
  return b;
}

GradCheckResult CheckTinyModel(const GradCheckOptions& o) {
  Tally tally("model_tiny", o);
  const ModelConfig& config = o.model;
  config.Validate();
  std::vector<double> class_weights;
  for (std::size_t k = 0; k < config.word_classes; ++k) class_weights.push_back(0.75 * (k + 1));
  for (std::size_t s = 0; s < o.seeds; ++s) {
    Rng init_rng(o.base_seed + s, RngStream::kInit, 8);
    Model<double> model = Model<float>::Build(config, init_rng).Cast<double>();
    // Perturb the zero biases so their gradients are generic.
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      for (double& v : model.parameters()[i].values()) v += 0.1 * init_rng.Normal();
    }
    const TinyBatch tiny = MakeTinyBatch(config, init_rng);
    ForwardOptions fo;
    fo.training = true;
    fo.lambda = o.lambda;

    auto forward = [&] {
      Rng dropout_rng(o.base_seed + s, RngStream::kDropout);
      BatchOutputs<double> batch;
      for (const auto& f : tiny.source) batch.source.push_back(ForwardSequence(model, f, fo, dropout_rng));
      for (const auto& f : tiny.target) batch.target.push_back(ForwardSequence(model, f, fo, dropout_rng));
      batch.source_labels = tiny.labels;
      batch.source_domains = tiny.source_domains;
      batch.target_domain = static_cast<int>(config.adv_domains) - 1;
      return batch;
    };
    const auto analytic = BackwardBatch(model, forward(), class_weights, BatchMode::kAdversarial);
    std::optional<BatchGradients<double>> word_only;
    if (o.inject_sign_bug) {
      word_only = BackwardBatch(model, forward(), class_weights, BatchMode::kWordOnly);
    }
    auto word_loss = [&] {
      return BackwardBatch(model, forward(), class_weights, BatchMode::kWordOnly).word_loss;
    };
    auto speaker_loss = [&] {
      return BackwardBatch(model, forward(), class_weights, BatchMode::kSpeakerOnly).speaker_loss;
    };

    const ModelLayout& lay = model.layout();
    auto is_speaker_head = [&](std::size_t idx) {
      return std::find(lay.adv_weight.begin(), lay.adv_weight.end(), idx) != lay.adv_weight.end() ||
             std::find(lay.adv_bias.begin(), lay.adv_bias.end(), idx) != lay.adv_bias.end();
    };
    auto is_trunk = [&](std::size_t idx) {
      return std::find(lay.trunk_weight.begin(), lay.trunk_weight.end(), idx) !=
                 lay.trunk_weight.end() ||
             std::find(lay.trunk_bias.begin(), lay.trunk_bias.end(), idx) != lay.trunk_bias.end();
    };
    for (std::size_t p = 0; p < model.parameters().size(); ++p) {
      T64& param = model.parameters()[p];
      const T64 fd_word = Numeric(word_loss, param, o.eps);
      const T64 fd_speaker = Numeric(speaker_loss, param, o.eps);
      // Speaker head: plain speaker gradient. Elsewhere the speaker part
      // arrives through the reversal, scaled by -lambda.
      const double speaker_scale = is_speaker_head(p) ? 1.0 : -o.lambda;
      T64 expected = fd_speaker;
      expected *= speaker_scale;
      expected += fd_word;
      T64 got = analytic.grads[p];
      if (word_only && is_trunk(p)) {
        // Mirror the reversed contribution: 2 * word_only - full.
        T64 twice = word_only->grads[p];
        twice *= 2.0;
        got *= -1.0;
        got += twice;
      }
      tally.Compare(got, expected);
    }
    tally.NextCase();
  }
  return tally.Finish();
}

}  // namespace

ModelConfig TinyModelConfig() {
  ModelConfig c;
  c.input_height = 2;
  c.input_width = 2;
  c.trunk_widths = {3, 3, 3};
  c.lstm_units = 3;
  c.word_classes = 2;
  c.adv_attach_index = 2;
  c.adv_widths = {3, 3};
  c.adv_domains = 2;
  return c;
}

std::vector<GradCheckResult> RunGradientChecks(const GradCheckOptions& options) {
  return {CheckDense(options),        CheckTanh(options),     CheckDropout(options),
          CheckLstmStep(options),     CheckLstmSequence(options), CheckSoftmaxCe(options),
          CheckGradientReversal(options), CheckTinyModel(options)};
}

}  // namespace advlip
