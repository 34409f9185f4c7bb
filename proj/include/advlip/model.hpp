// advlip/model.hpp

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

#ifndef ADVLIP_MODEL_HPP_
#define ADVLIP_MODEL_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advlip/layers.hpp"
#include "advlip/rng.hpp"
#include "advlip/tensor.hpp"

namespace advlip {

/// Network topology. Defaults describe the full-size lipreader: three
/// 256-wide tanh layers each followed by dropout, a 256-cell LSTM, a 51-way
/// word softmax on the last frame, and a 2 x 100 speaker classifier fed from
/// the output of trunk layer 2 through gradient reversal.
struct ModelConfig {
  std::size_t input_height = 40;
  std::size_t input_width = 40;
  std::vector<std::size_t> trunk_widths{256, 256, 256};
  double dropout_ratio = 0.5;
  std::size_t lstm_units = 256;
  std::size_t word_classes = 51;
  // Number of trunk layers below the speaker branch (1-based).
  std::size_t adv_attach_index = 2;
  std::vector<std::size_t> adv_widths{100, 100};
  std::size_t adv_domains = 2;
  double init_stddev = 0.1;
  double lstm_forget_bias = 1.0;

  std::size_t input_size() const { return input_height * input_width; }
  /// Throws ConfigError naming the offending field.
  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Named tensors in insertion order.
template <typename T>
class ParameterSet {
 public:
  std::size_t Add(std::string name, BasicTensor<T> value);

  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  BasicTensor<T>& operator[](std::size_t i) { return tensors_[i]; }
  const BasicTensor<T>& operator[](std::size_t i) const { return tensors_[i]; }
  std::optional<std::size_t> Find(const std::string& name) const;

  /// Same names and shapes, all zeros.
  ParameterSet ZerosLike() const;
  std::size_t ScalarCount() const;
  /// Indices ordered by name; the canonical serialization order.
  std::vector<std::size_t> SortedOrder() const;

  ParameterSet& operator+=(const ParameterSet& other);
  bool operator==(const ParameterSet&) const = default;

  template <typename U>
  ParameterSet<U> Cast() const {
    ParameterSet<U> out;
    for (std::size_t i = 0; i < size(); ++i) out.Add(names_[i], tensors_[i].template Cast<U>());
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<BasicTensor<T>> tensors_;
};

/// Positions of each layer's tensors inside the model's ParameterSet.
struct ModelLayout {
  std::vector<std::size_t> trunk_weight, trunk_bias;
  std::size_t lstm_w_input = 0, lstm_w_recurrent = 0, lstm_bias = 0;
  std::size_t word_weight = 0, word_bias = 0;
  // Hidden speaker layers followed by the speaker softmax layer.
  std::vector<std::size_t> adv_weight, adv_bias;

  bool operator==(const ModelLayout&) const = default;
};

template <typename T>
class Model {
 public:
  /// Weights ~ truncated normal(init_stddev); biases zero except the LSTM
  /// forget-gate block, which starts at lstm_forget_bias.
  static Model Build(const ModelConfig& config, Rng& rng);
  /// All parameters zero. Useful for hand-constructed models.
  static Model Zeros(const ModelConfig& config);
  /// Adopts `params`; names and shapes must match what `config` implies.
  static Model FromParameters(const ModelConfig& config, ParameterSet<T> params);

  const ModelConfig& config() const { return config_; }
  const ModelLayout& layout() const { return layout_; }
  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }

  BasicTensor<T>& param(const std::string& name);
  const BasicTensor<T>& param(const std::string& name) const;

  LstmParams<T> lstm() const {
    return {params_[layout_.lstm_w_input], params_[layout_.lstm_w_recurrent],
            params_[layout_.lstm_bias]};
  }

  template <typename U>
  Model<U> Cast() const {
    return Model<U>::FromParameters(config_, params_.template Cast<U>());
  }

  bool operator==(const Model&) const = default;

 private:
  Model(ModelConfig config, ParameterSet<T> params);

  ModelConfig config_;
  ParameterSet<T> params_;
  ModelLayout layout_;
};

struct ForwardOptions {
  bool training = false;
  // Scale of the reversed gradient entering the trunk from the speaker branch.
  double lambda = 0.0;
  bool speaker_branch = true;
};

template <typename T>
struct SequenceCache {
  std::vector<DenseCache<T>> trunk_dense;
  std::vector<TanhCache<T>> trunk_tanh;
  std::vector<DropoutCache<T>> trunk_dropout;
  std::optional<LstmCache<T>> lstm;
  DenseCache<T> word;
  std::vector<DenseCache<T>> adv_dense;
  std::vector<TanhCache<T>> adv_tanh;
};

template <typename T>
struct SequenceOutput {
  BasicTensor<T> word_logits_last;  // [1 x word_classes], frame T-1 only
  BasicTensor<T> speaker_logits;    // [T x adv_domains]; empty without the branch
  std::size_t length = 0;
  T lambda = T(0);
  bool training = false;
  SequenceCache<T> cache;
};

/// Runs one sequence. `frames` is [T x H x W] or [T x H*W]; the LSTM state
/// starts at zero. The trunk runs on every frame, the speaker branch reads
/// trunk layer `adv_attach_index` on every frame, and the word head only
/// sees the LSTM output of the final frame. Dropout (training only) draws an
/// independent mask per frame from `rng`.
template <typename T>
SequenceOutput<T> ForwardSequence(const Model<T>& model, const BasicTensor<T>& frames,
                                  const ForwardOptions& options, Rng& rng);

/// Accumulates into `grads` the parameter gradients of one sequence, given
/// the loss gradient on its final word logits and/or its framewise speaker
/// logits (either may be null). The speaker gradient reaches the trunk
/// multiplied by -lambda; the speaker head itself receives it unreversed.
template <typename T>
void BackwardSequence(const Model<T>& model, const SequenceOutput<T>& output,
                      const BasicTensor<T>* d_word_logits,
                      const BasicTensor<T>* d_speaker_logits, ParameterSet<T>& grads);

enum class BatchMode {
  kWordOnly,     // source half only, no speaker loss
  kAdversarial,  // word loss on source + framewise speaker loss on both halves
  kSpeakerOnly,  // speaker loss only; used for analysis of the adversarial push
};

template <typename T>
struct BatchOutputs {
  std::vector<SequenceOutput<T>> source;
  std::vector<int> source_labels;
  std::vector<int> source_domains;
  // Unlabelled target sequences; they never contribute to the word loss.
  std::vector<SequenceOutput<T>> target;
  int target_domain = -1;
};

template <typename T>
struct BatchGradients {
  ParameterSet<T> grads;
  double word_loss = 0.0;
  double speaker_loss = 0.0;
  std::size_t speaker_correct = 0;
  std::size_t speaker_frames = 0;
};

/// Word loss: class-weighted cross-entropy over the source sequences'
/// final frames, normalised by the weight sum. Speaker loss: uniform mean
/// cross-entropy over every frame of every sequence in the batch. The two
/// are summed; lambda lives only in the reversal.
template <typename T>
BatchGradients<T> BackwardBatch(const Model<T>& model, const BatchOutputs<T>& batch,
                                std::span<const double> class_weights, BatchMode mode);

/// Checkpoint: "ADVCKPT1", u32 length + canonical JSON config, u32 tensor
/// count, then (u32 name length, name, tensor record) sorted by name.
void SaveCheckpoint(const Model<float>& model, const std::filesystem::path& path);
Model<float> LoadCheckpoint(const std::filesystem::path& path);
void WriteCheckpoint(std::ostream& os, const Model<float>& model);
Model<float> ReadCheckpoint(std::istream& is);

}  // namespace advlip

#endif  // ADVLIP_MODEL_HPP_
