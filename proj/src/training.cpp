// src/training.cpp

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

#include "advlip/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "advlip/error.hpp"
#include "advlip/eval.hpp"

namespace advlip {

std::string_view TrainModeName(TrainMode mode) {
  return mode == TrainMode::kBaseline ? "baseline" : "adversarial";
}

TrainMode ParseTrainMode(std::string_view name) {
  if (name == "baseline") return TrainMode::kBaseline;
  if (name == "adversarial") return TrainMode::kAdversarial;
  throw ConfigError("mode", "expected baseline or adversarial, got '" + std::string(name) + "'");
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate", "must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
  if (batch_source == 0) throw ConfigError("batch_source", "must be positive");
  if (batch_target == 0) throw ConfigError("batch_target", "must be positive");
  if (!(adv_step > 0.0)) throw ConfigError("adv_step", "must be positive");
  if (adv_epoch_interval == 0) throw ConfigError("adv_epoch_interval", "must be positive");
  if (!(adv_max > 0.0)) throw ConfigError("adv_max", "must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs", "must be positive");
  if (target_pool_limit && *target_pool_limit == 0) {
    throw ConfigError("target_pool_limit", "must be positive");
  }
}

// ---------------------------------------------------------------- weights

std::vector<Rational> ClassWeightsExact(std::span<const int> labels, std::size_t num_classes) {
  std::vector<std::uint64_t> counts(num_classes, 0);
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw DataError(DataError::Kind::kMalformed, "label " + std::to_string(label) + " out of range");
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  std::vector<Rational> weights(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw DataError(DataError::Kind::kInsufficient,
                      "class " + std::to_string(c) + " has no training sequences");
    }
    weights[c] = {labels.size(), num_classes * counts[c]};
  }
  return weights;
}

std::vector<double> ClassWeights(std::span<const int> labels, std::size_t num_classes) {
  std::vector<double> out;
  for (const Rational& r : ClassWeightsExact(labels, num_classes)) out.push_back(r.value());
  return out;
}

double AdversarialWeight(std::size_t epoch, const TrainConfig& config) {
  const double steps = static_cast<double>(epoch / config.adv_epoch_interval);
  const double raw = std::min(config.adv_max, config.adv_step * steps);
  return std::round(raw * 1e12) / 1e12;
}

// ---------------------------------------------------------------- batches

BatchComposer::BatchComposer(std::size_t n_source, std::size_t n_target, std::size_t batch_source,
                             std::size_t batch_target, Rng& rng)
    : n_source_(n_source), batch_source_(batch_source), batch_target_(batch_target), rng_(rng),
      target_order_(n_target), target_cursor_(n_target), target_uses_(n_target, 0) {
  if (n_source == 0) throw ConfigError("source", "source pool is empty");
  if (batch_source == 0) throw ConfigError("batch_source", "must be positive");
  for (std::size_t i = 0; i < n_target; ++i) target_order_[i] = i;
}

std::vector<std::vector<std::size_t>> BatchComposer::NextEpoch() {
  std::vector<std::size_t> order(n_source_);
  for (std::size_t i = 0; i < n_source_; ++i) order[i] = i;
  rng_.Shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start + batch_source_ <= n_source_; start += batch_source_) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(start + batch_source_));
  }
  dropped_ = n_source_ % batch_source_;
  return batches;
}

std::vector<std::size_t> BatchComposer::NextTargets() {
  if (target_order_.empty()) throw ConfigError("target_pool", "target pool is empty");
  std::vector<std::size_t> out;
  out.reserve(batch_target_);
  while (out.size() < batch_target_) {
    if (target_cursor_ == target_order_.size()) {
      rng_.Shuffle(target_order_.begin(), target_order_.end());
      target_cursor_ = 0;
    }
    const std::size_t idx = target_order_[target_cursor_++];
    ++target_uses_[idx];
    out.push_back(idx);
  }
  return out;
}

// ---------------------------------------------------------------- optimizer

template <typename T>
void MomentumStep(ParameterSet<T>& params, const ParameterSet<T>& grads, OptimizerState<T>& state,
                  double learning_rate, double momentum) {
  if (grads.size() != params.size() || state.accum.size() != params.size()) {
    throw ShapeError("momentum step: parameter, gradient and state sets differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape() != params[i].shape() || state.accum[i].shape() != params[i].shape()) {
      throw ShapeError("momentum step: shape mismatch for " + params.name(i));
    }
    if (!AllFinite(grads[i])) {
      throw NumericalError("non-finite gradient for " + params.name(i) +
                           " (max |g| = " + std::to_string(static_cast<double>(MaxAbs(grads[i]))) + ")");
    }
  }
  const T mu = static_cast<T>(momentum), lr = static_cast<T>(learning_rate);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].values();
    auto a = state.accum[i].values();
    const auto g = grads[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      a[k] = mu * a[k] + g[k];
      p[k] -= lr * a[k];
    }
  }
}

template void MomentumStep(ParameterSet<float>&, const ParameterSet<float>&,
                           OptimizerState<float>&, double, double);
template void MomentumStep(ParameterSet<double>&, const ParameterSet<double>&,
                           OptimizerState<double>&, double, double);

// ---------------------------------------------------------------- early stopping

bool EarlyStopping::Update(std::size_t epoch, double metric) {
  if (!best_epoch_ || metric > best_metric_) {
    best_epoch_ = epoch;
    best_metric_ = metric;
    epochs_since_improvement_ = 0;
    return true;
  }
  ++epochs_since_improvement_;
  return false;
}

// ---------------------------------------------------------------- training

namespace {

void CheckSequences(const std::vector<const FrameSequence*>& seqs, const ModelConfig& mc,
                    bool need_labels, const char* what) {
  for (const FrameSequence* s : seqs) {
    if (s->length() == 0 || s->frames.size() != s->length() * mc.input_size()) {
      throw DataError(DataError::Kind::kMalformed,
                      std::string(what) + " sequence " + s->id + " does not match the model input");
    }
    if (need_labels) {
      if (!s->word_label) {
        throw DataError(DataError::Kind::kMalformed,
                        std::string(what) + " sequence " + s->id + " is unlabeled");
      }
      if (*s->word_label < 0 || static_cast<std::size_t>(*s->word_label) >= mc.word_classes) {
        throw DataError(DataError::Kind::kMalformed,
                        std::string(what) + " sequence " + s->id + " has label out of range");
      }
    }
  }
}

}  // namespace

TrainResult Train(Model<float> model, const TrainInputs& inputs, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.Validate();
  const ModelConfig& mc = model.config();
  const bool adversarial = config.mode == TrainMode::kAdversarial;

  if (inputs.source_train.size() < config.batch_source) {
    throw ConfigError("batch_source", "fewer source training sequences than one batch");
  }
  if (inputs.source_val.empty() && !hooks.validation_override) {
    throw ConfigError("source_val", "source validation set is empty");
  }
  CheckSequences(inputs.source_train, mc, true, "source training");
  CheckSequences(inputs.source_val, mc, true, "source validation");
  CheckSequences(inputs.target_val, mc, true, "target validation");

  std::map<int, int> domains = inputs.domain_index;
  if (domains.empty()) {
    std::set<int> sources;
    for (const FrameSequence* s : inputs.source_train) sources.insert(s->speaker_id);
    int next = 0;
    for (int id : sources) domains[id] = next++;
    if (inputs.target_pool != nullptr && !inputs.target_pool->empty()) {
      domains.emplace(inputs.target_pool->speaker_id(), next);
    }
  }
  std::vector<int> source_labels, source_domains;
  for (const FrameSequence* s : inputs.source_train) {
    source_labels.push_back(*s->word_label);
    const auto it = domains.find(s->speaker_id);
    if (it == domains.end()) {
      throw ConfigError("domain_index", "no domain for speaker " + std::to_string(s->speaker_id));
    }
    source_domains.push_back(it->second);
  }
  const std::vector<double> class_weights = ClassWeights(source_labels, mc.word_classes);

  TargetPool pool;
  int target_domain = -1;
  if (adversarial) {
    if (inputs.target_pool == nullptr || inputs.target_pool->empty()) {
      throw ConfigError("target_pool", "adversarial training needs target sequences");
    }
    for (std::size_t i = 0; i < inputs.target_pool->size(); ++i) {
      const Tensor& f = inputs.target_pool->frames(i);
      if (f.empty() || f.size() != f.dim(0) * mc.input_size()) {
        throw DataError(DataError::Kind::kMalformed, "target sequence does not match the model input");
      }
    }
    const auto it = domains.find(inputs.target_pool->speaker_id());
    if (it == domains.end()) throw ConfigError("domain_index", "no domain for the target speaker");
    target_domain = it->second;
    for (const auto& [speaker, index] : domains) {
      if (index < 0 || static_cast<std::size_t>(index) >= mc.adv_domains) {
        throw ConfigError("adv_domains", "speaker classifier has " + std::to_string(mc.adv_domains) +
                                             " outputs, domain index " + std::to_string(index) +
                                             " is out of range");
      }
    }
    if (config.target_pool_limit) {
      Rng limit_rng(config.seed, RngStream::kShuffle, 1);
      pool = inputs.target_pool->Limited(*config.target_pool_limit, limit_rng);
    } else {
      pool = *inputs.target_pool;
    }
  }

  Rng shuffle_rng(config.seed, RngStream::kShuffle);
  Rng dropout_rng(config.seed, RngStream::kDropout);
  BatchComposer composer(inputs.source_train.size(), pool.size(), config.batch_source,
                         config.batch_target, shuffle_rng);
  auto state = OptimizerState<float>::ZerosLike(model.parameters());
  EarlyStopping stopper(config.patience);
  std::optional<Model<float>> best;
  std::vector<EpochMetrics> log;
  bool early_stopped = false;
  const BatchMode mode = adversarial ? BatchMode::kAdversarial : BatchMode::kWordOnly;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.lambda = adversarial ? AdversarialWeight(epoch, config) : 0.0;
    ForwardOptions fo;
    fo.training = true;
    fo.lambda = m.lambda;
    fo.speaker_branch = adversarial;

    std::size_t speaker_correct = 0, speaker_frames = 0;
    for (const auto& batch_ids : composer.NextEpoch()) {
      BatchOutputs<float> batch;
      for (std::size_t i : batch_ids) {
        batch.source.push_back(ForwardSequence(model, inputs.source_train[i]->frames, fo, dropout_rng));
        batch.source_labels.push_back(source_labels[i]);
        batch.source_domains.push_back(source_domains[i]);
      }
      if (adversarial) {
        for (std::size_t j : composer.NextTargets()) {
          batch.target.push_back(ForwardSequence(model, pool.frames(j), fo, dropout_rng));
        }
        batch.target_domain = target_domain;
      }
      const auto g = BackwardBatch(model, batch, class_weights, mode);
      if (!std::isfinite(g.word_loss) || !std::isfinite(g.speaker_loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));
      }
      MomentumStep(model.parameters(), g.grads, state, config.learning_rate, config.momentum);
      m.word_loss += g.word_loss;
      m.speaker_loss += g.speaker_loss;
      speaker_correct += g.speaker_correct;
      speaker_frames += g.speaker_frames;
      ++m.batches;
    }
    m.dropped_source = composer.dropped_last_epoch();
    if (m.batches > 0) {
      m.word_loss /= static_cast<double>(m.batches);
      m.speaker_loss /= static_cast<double>(m.batches);
    }
    m.speaker_frame_acc = speaker_frames == 0 ? 0.0
                                              : static_cast<double>(speaker_correct) /
                                                    static_cast<double>(speaker_frames);
    m.src_val_acc = hooks.validation_override ? hooks.validation_override(epoch, model)
                                              : Evaluate(model, inputs.source_val).accuracy;
    m.tgt_val_acc = inputs.target_val.empty() ? std::numeric_limits<double>::quiet_NaN()
                                              : Evaluate(model, inputs.target_val).accuracy;
    if (stopper.Update(epoch, m.src_val_acc)) best = model;
    log.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);
    if (stopper.ShouldStop()) {
      early_stopped = true;
      break;
    }
  }
  return TrainResult{std::move(*best), std::move(log), *stopper.best_epoch(), stopper.best_metric(),
                     early_stopped};
}

std::string FormatMetricsCsv(const std::vector<EpochMetrics>& log) {
  std::string out = "epoch,lambda,word_loss,speaker_loss,src_val_acc,tgt_val_acc,speaker_frame_acc\n";
  char buf[512];
  for (const auto& m : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", m.epoch, m.lambda,
                  m.word_loss, m.speaker_loss, m.src_val_acc, m.tgt_val_acc, m.speaker_frame_acc);
    out += buf;
  }
  return out;
}

void WriteMetricsCsv(const std::filesystem::path& path, const std::vector<EpochMetrics>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataError::Kind::kIo, "cannot write " + path.string());
  out << FormatMetricsCsv(log);
  if (!out) throw DataError(DataError::Kind::kIo, "failed writing " + path.string());
}

}  // namespace advlip
