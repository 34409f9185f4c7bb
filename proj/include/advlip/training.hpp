// advlip/training.hpp

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

#ifndef ADVLIP_TRAINING_HPP_
#define ADVLIP_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advlip/data.hpp"
#include "advlip/model.hpp"

namespace advlip {

enum class TrainMode { kBaseline, kAdversarial };

std::string_view TrainModeName(TrainMode mode);
TrainMode ParseTrainMode(std::string_view name);

struct TrainConfig {
  TrainMode mode = TrainMode::kAdversarial;
  double learning_rate = 0.001;
  double momentum = 0.5;
  std::size_t batch_source = 8;
  std::size_t batch_target = 8;
  double adv_step = 0.2;
  std::size_t adv_epoch_interval = 10;
  double adv_max = 1.0;
  std::size_t patience = 30;
  std::size_t max_epochs = 500;
  std::uint64_t seed = 0;
  std::optional<std::size_t> target_pool_limit;

  /// Throws ConfigError naming the offending field.
  void Validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// ---------------------------------------------------------------- weights

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

/// weight(c) = N / (C * count(c)) as an unreduced fraction. Throws
/// DataError if a class in [0, num_classes) never occurs.
std::vector<Rational> ClassWeightsExact(std::span<const int> labels, std::size_t num_classes);
std::vector<double> ClassWeights(std::span<const int> labels, std::size_t num_classes);

/// min(adv_max, adv_step * floor(epoch / adv_epoch_interval)), rounded to
/// 12 decimals so that staircase values come out as the decimal literals.
double AdversarialWeight(std::size_t epoch, const TrainConfig& config);

// ---------------------------------------------------------------- batches

/// Source batches without replacement, reshuffled every epoch (a partial
/// final batch is dropped), plus target draws from a shuffled cyclic
/// iterator over the target pool that persists across epochs.
class BatchComposer {
 public:
  BatchComposer(std::size_t n_source, std::size_t n_target, std::size_t batch_source,
                std::size_t batch_target, Rng& rng);

  /// Source index batches for one epoch.
  std::vector<std::vector<std::size_t>> NextEpoch();
  /// `batch_target` pool indices; repeats once the pool is exhausted.
  std::vector<std::size_t> NextTargets();

  std::size_t dropped_last_epoch() const { return dropped_; }
  /// How often each pool entry has been handed out so far.
  const std::vector<std::size_t>& target_uses() const { return target_uses_; }

 private:
  std::size_t n_source_, batch_source_, batch_target_;
  Rng& rng_;
  std::vector<std::size_t> target_order_;
  std::size_t target_cursor_ = 0;
  std::vector<std::size_t> target_uses_;
  std::size_t dropped_ = 0;
};

// ---------------------------------------------------------------- optimizer

template <typename T>
struct OptimizerState {
  ParameterSet<T> accum;

  static OptimizerState ZerosLike(const ParameterSet<T>& params) { return {params.ZerosLike()}; }
};

/// accum = momentum * accum + grad; param -= learning_rate * accum.
/// Throws NumericalError, before touching anything, if a gradient is not
/// finite.
template <typename T>
void MomentumStep(ParameterSet<T>& params, const ParameterSet<T>& grads, OptimizerState<T>& state,
                  double learning_rate, double momentum);

// ---------------------------------------------------------------- early stopping

/// Tracks the best validation accuracy. Only strict improvements count, so
/// ties keep the earlier epoch. Training stops once more than `patience`
/// epochs have passed without improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true if `metric` is a new best.
  bool Update(std::size_t epoch, double metric);
  bool ShouldStop() const { return epochs_since_improvement_ > patience_; }

  std::optional<std::size_t> best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_metric_; }
  std::size_t epochs_since_improvement() const { return epochs_since_improvement_; }

 private:
  std::size_t patience_;
  std::optional<std::size_t> best_epoch_;
  double best_metric_ = 0.0;
  std::size_t epochs_since_improvement_ = 0;
};

// ---------------------------------------------------------------- training

struct EpochMetrics {
  std::size_t epoch = 0;
  double lambda = 0.0;
  double word_loss = 0.0;
  double speaker_loss = 0.0;
  double src_val_acc = 0.0;
  double tgt_val_acc = 0.0;  // NaN when no target validation set is given
  double speaker_frame_acc = 0.0;
  std::size_t batches = 0;
  std::size_t dropped_source = 0;
};

struct TrainInputs {
  std::vector<const FrameSequence*> source_train;
  std::vector<const FrameSequence*> source_val;
  // Only for monitoring; never used for decisions.
  std::vector<const FrameSequence*> target_val;
  // Required in adversarial mode.
  const TargetPool* target_pool = nullptr;
  // Speaker id -> speaker-classifier output index; sources first, then the
  // target. Built from the sequences when empty.
  std::map<int, int> domain_index;
};

struct TrainHooks {
  // Replaces the source validation accuracy; lets tests inject a trace.
  std::function<double(std::size_t epoch, const Model<float>& model)> validation_override;
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  Model<float> best;
  std::vector<EpochMetrics> log;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  bool early_stopped = false;
};

/// Runs the full protocol from `model` and returns the checkpoint of the
/// best source-validation epoch. Inconsistent inputs raise before epoch 0.
TrainResult Train(Model<float> model, const TrainInputs& inputs, const TrainConfig& config,
                  const TrainHooks& hooks = {});

/// Header epoch,lambda,word_loss,speaker_loss,src_val_acc,tgt_val_acc,
/// speaker_frame_acc; values with 9 significant digits.
std::string FormatMetricsCsv(const std::vector<EpochMetrics>& log);
void WriteMetricsCsv(const std::filesystem::path& path, const std::vector<EpochMetrics>& log);

}  // namespace advlip

#endif  // ADVLIP_TRAINING_HPP_
