// src/model.cpp

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

#include "advlip/model.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "advlip/error.hpp"
#include "advlip/init.hpp"

namespace advlip {

void ModelConfig::Validate() const {
  if (input_height == 0) throw ConfigError("input_height", "must be positive");
  if (input_width == 0) throw ConfigError("input_width", "must be positive");
  if (trunk_widths.empty()) throw ConfigError("trunk_widths", "need at least one trunk layer");
  for (std::size_t w : trunk_widths) {
    if (w == 0) throw ConfigError("trunk_widths", "widths must be positive");
  }
  if (!(dropout_ratio >= 0.0 && dropout_ratio < 1.0)) {
    throw ConfigError("dropout_ratio", "must lie in [0, 1)");
  }
  if (lstm_units == 0) throw ConfigError("lstm_units", "must be positive");
  if (word_classes < 2) throw ConfigError("word_classes", "need at least two classes");
  if (adv_attach_index < 1 || adv_attach_index > trunk_widths.size()) {
    throw ConfigError("adv_attach_index", "must lie in [1, number of trunk layers]");
  }
  for (std::size_t w : adv_widths) {
    if (w == 0) throw ConfigError("adv_widths", "widths must be positive");
  }
  if (adv_domains < 2) throw ConfigError("adv_domains", "need at least two domains");
  if (!(init_stddev > 0.0)) throw ConfigError("init_stddev", "must be positive");
}

// ---------------------------------------------------------------- ParameterSet

template <typename T>
std::size_t ParameterSet<T>::Add(std::string name, BasicTensor<T> value) {
  if (Find(name)) throw ConfigError(name, "duplicate parameter name");
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
  return tensors_.size() - 1;
}

template <typename T>
std::optional<std::size_t> ParameterSet<T>::Find(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

template <typename T>
ParameterSet<T> ParameterSet<T>::ZerosLike() const {
  ParameterSet out;
  for (std::size_t i = 0; i < size(); ++i) out.Add(names_[i], BasicTensor<T>(tensors_[i].shape()));
  return out;
}

template <typename T>
std::size_t ParameterSet<T>::ScalarCount() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

template <typename T>
std::vector<std::size_t> ParameterSet<T>::SortedOrder() const {
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return names_[a] < names_[b]; });
  return order;
}

template <typename T>
ParameterSet<T>& ParameterSet<T>::operator+=(const ParameterSet& other) {
  if (other.names_ != names_) throw ShapeError("parameter sets do not match");
  for (std::size_t i = 0; i < size(); ++i) tensors_[i] += other.tensors_[i];
  return *this;
}

// ---------------------------------------------------------------- Model

namespace {

std::string LayerName(const char* group, std::size_t i, const char* what) {
  return std::string(group) + "." + std::to_string(i) + "." + what;
}

// Parameter names and shapes implied by a configuration, in build order.
std::vector<std::pair<std::string, Shape>> ParameterSpecs(const ModelConfig& c) {
  std::vector<std::pair<std::string, Shape>> specs;
  std::size_t in = c.input_size();
  for (std::size_t i = 0; i < c.trunk_widths.size(); ++i) {
    specs.push_back({LayerName("trunk", i, "weight"), {in, c.trunk_widths[i]}});
    specs.push_back({LayerName("trunk", i, "bias"), {c.trunk_widths[i]}});
    in = c.trunk_widths[i];
  }
  const std::size_t u = c.lstm_units;
  specs.push_back({"lstm.w_input", {in, 4 * u}});
  specs.push_back({"lstm.w_recurrent", {u, 4 * u}});
  specs.push_back({"lstm.bias", {4 * u}});
  specs.push_back({"word.weight", {u, c.word_classes}});
  specs.push_back({"word.bias", {c.word_classes}});
  std::size_t adv_in = c.trunk_widths[c.adv_attach_index - 1];
  for (std::size_t i = 0; i < c.adv_widths.size(); ++i) {
    specs.push_back({LayerName("speaker", i, "weight"), {adv_in, c.adv_widths[i]}});
    specs.push_back({LayerName("speaker", i, "bias"), {c.adv_widths[i]}});
    adv_in = c.adv_widths[i];
  }
  const std::size_t out = c.adv_widths.size();
  specs.push_back({LayerName("speaker", out, "weight"), {adv_in, c.adv_domains}});
  specs.push_back({LayerName("speaker", out, "bias"), {c.adv_domains}});
  return specs;
}

ModelLayout MakeLayout(const ModelConfig& c) {
  ModelLayout layout;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < c.trunk_widths.size(); ++i) {
    layout.trunk_weight.push_back(idx++);
    layout.trunk_bias.push_back(idx++);
  }
  layout.lstm_w_input = idx++;
  layout.lstm_w_recurrent = idx++;
  layout.lstm_bias = idx++;
  layout.word_weight = idx++;
  layout.word_bias = idx++;
  for (std::size_t i = 0; i <= c.adv_widths.size(); ++i) {
    layout.adv_weight.push_back(idx++);
    layout.adv_bias.push_back(idx++);
  }
  return layout;
}

}  // namespace

template <typename T>
Model<T>::Model(ModelConfig config, ParameterSet<T> params)
    : config_(std::move(config)), params_(std::move(params)), layout_(MakeLayout(config_)) {}

template <typename T>
Model<T> Model<T>::Build(const ModelConfig& config, Rng& rng) {
  config.Validate();
  ParameterSet<T> params;
  for (auto& [name, shape] : ParameterSpecs(config)) {
    if (shape.size() == 2) {
      params.Add(name, TruncatedNormal<T>(shape, config.init_stddev, rng));
    } else {
      params.Add(name, BasicTensor<T>(shape));
    }
  }
  Model model(config, std::move(params));
  auto& lstm_bias = model.params_[model.layout_.lstm_bias];
  const std::size_t u = config.lstm_units;
  for (std::size_t k = u; k < 2 * u; ++k) lstm_bias[k] = static_cast<T>(config.lstm_forget_bias);
  return model;
}

template <typename T>
Model<T> Model<T>::Zeros(const ModelConfig& config) {
  config.Validate();
  ParameterSet<T> params;
  for (auto& [name, shape] : ParameterSpecs(config)) params.Add(name, BasicTensor<T>(shape));
  return Model(config, std::move(params));
}

template <typename T>
Model<T> Model<T>::FromParameters(const ModelConfig& config, ParameterSet<T> params) {
  config.Validate();
  const auto specs = ParameterSpecs(config);
  if (specs.size() != params.size()) {
    throw DataError(DataError::Kind::kIntegrity,
                    "expected " + std::to_string(specs.size()) + " parameter tensors, got " +
                        std::to_string(params.size()));
  }
  ParameterSet<T> ordered;
  for (const auto& [name, shape] : specs) {
    const auto idx = params.Find(name);
    if (!idx) throw DataError(DataError::Kind::kIntegrity, "missing parameter " + name);
    if (params[*idx].shape() != shape) {
      throw DataError(DataError::Kind::kIntegrity,
                      "parameter " + name + " has shape " + ShapeToString(params[*idx].shape()) +
                          ", expected " + ShapeToString(shape));
    }
    ordered.Add(name, std::move(params[*idx]));
  }
  return Model(config, std::move(ordered));
}

template <typename T>
BasicTensor<T>& Model<T>::param(const std::string& name) {
  const auto idx = params_.Find(name);
  if (!idx) throw ConfigError(name, "no such parameter");
  return params_[*idx];
}

template <typename T>
const BasicTensor<T>& Model<T>::param(const std::string& name) const {
  const auto idx = params_.Find(name);
  if (!idx) throw ConfigError(name, "no such parameter");
  return params_[*idx];
}

// ---------------------------------------------------------------- forward

template <typename T>
SequenceOutput<T> ForwardSequence(const Model<T>& model, const BasicTensor<T>& frames,
                                  const ForwardOptions& options, Rng& rng) {
  const ModelConfig& cfg = model.config();
  const ModelLayout& lay = model.layout();
  const ParameterSet<T>& p = model.parameters();
  if (frames.empty() || frames.rank() < 2) {
    throw ShapeError("forward: empty sequence or missing frame axis");
  }
  const std::size_t steps = frames.dim(0);
  if (frames.size() / steps != cfg.input_size()) {
    throw ShapeError("forward: frames " + ShapeToString(frames.shape()) + " do not match " +
                     std::to_string(cfg.input_height) + "x" + std::to_string(cfg.input_width) +
                     " input");
  }
  if (!(options.lambda >= 0.0)) throw ConfigError("lambda", "must be non-negative");

  SequenceOutput<T> out;
  out.length = steps;
  out.lambda = static_cast<T>(options.lambda);
  out.training = options.training;
  SequenceCache<T>& cache = out.cache;

  BasicTensor<T> h = frames.Reshaped({steps, cfg.input_size()});
  BasicTensor<T> branch_input;
  for (std::size_t l = 0; l < cfg.trunk_widths.size(); ++l) {
    auto dense = DenseForward(h, p[lay.trunk_weight[l]], p[lay.trunk_bias[l]]);
    auto act = TanhForward(dense.output);
    auto drop = DropoutForward(act.output, cfg.dropout_ratio, options.training, rng);
    cache.trunk_dense.push_back(std::move(dense.cache));
    cache.trunk_tanh.push_back(std::move(act.cache));
    cache.trunk_dropout.push_back(std::move(drop.cache));
    h = std::move(drop.output);
    if (l + 1 == cfg.adv_attach_index) branch_input = GradientReversalForward(h);
  }

  auto lstm = LstmForwardSequence(h, model.lstm());
  BasicTensor<T> last({1, cfg.lstm_units});
  const auto last_row = lstm.hidden.row(steps - 1);
  std::copy(last_row.begin(), last_row.end(), last.data());
  auto word = DenseForward(last, p[lay.word_weight], p[lay.word_bias]);
  out.word_logits_last = std::move(word.output);
  cache.word = std::move(word.cache);
  cache.lstm = std::move(lstm.cache);

  if (options.speaker_branch) {
    BasicTensor<T> a = std::move(branch_input);
    const std::size_t hidden_layers = cfg.adv_widths.size();
    for (std::size_t l = 0; l <= hidden_layers; ++l) {
      auto dense = DenseForward(a, p[lay.adv_weight[l]], p[lay.adv_bias[l]]);
      cache.adv_dense.push_back(std::move(dense.cache));
      if (l < hidden_layers) {
        auto act = TanhForward(dense.output);
        cache.adv_tanh.push_back(std::move(act.cache));
        a = std::move(act.output);
      } else {
        a = std::move(dense.output);
      }
    }
    out.speaker_logits = std::move(a);
  }
  return out;
}

// ---------------------------------------------------------------- backward

namespace {

template <typename T>
void Accumulate(ParameterSet<T>& grads, std::size_t idx, const BasicTensor<T>& g) {
  grads[idx] += g;
}

}  // namespace

template <typename T>
void BackwardSequence(const Model<T>& model, const SequenceOutput<T>& output,
                      const BasicTensor<T>* d_word_logits,
                      const BasicTensor<T>* d_speaker_logits, ParameterSet<T>& grads) {
  const ModelConfig& cfg = model.config();
  const ModelLayout& lay = model.layout();
  const ParameterSet<T>& p = model.parameters();
  const SequenceCache<T>& cache = output.cache;
  const std::size_t steps = output.length;

  // Upstream gradient on the trunk output; empty while nothing flows there.
  BasicTensor<T> d_trunk;
  if (d_word_logits != nullptr) {
    auto word = DenseBackward(*d_word_logits, cache.word, p[lay.word_weight]);
    Accumulate(grads, lay.word_weight, word.d_weight);
    Accumulate(grads, lay.word_bias, word.d_bias);
    BasicTensor<T> d_hidden({steps, cfg.lstm_units});
    std::copy(word.d_input.values().begin(), word.d_input.values().end(),
              d_hidden.row(steps - 1).begin());
    auto lstm = LstmBackwardSequence(d_hidden, *cache.lstm, model.lstm());
    Accumulate(grads, lay.lstm_w_input, lstm.params.d_w_input);
    Accumulate(grads, lay.lstm_w_recurrent, lstm.params.d_w_recurrent);
    Accumulate(grads, lay.lstm_bias, lstm.params.d_bias);
    d_trunk = std::move(lstm.d_inputs);
  }

  BasicTensor<T> d_branch;
  if (d_speaker_logits != nullptr) {
    if (cache.adv_dense.empty()) {
      throw ConfigError("speaker_branch", "backward needs a forward pass with the speaker branch");
    }
    BasicTensor<T> d = *d_speaker_logits;
    for (std::size_t l = cache.adv_dense.size(); l-- > 0;) {
      if (l < cache.adv_tanh.size()) d = TanhBackward(d, cache.adv_tanh[l]);
      auto dense = DenseBackward(d, cache.adv_dense[l], p[lay.adv_weight[l]]);
      Accumulate(grads, lay.adv_weight[l], dense.d_weight);
      Accumulate(grads, lay.adv_bias[l], dense.d_bias);
      d = std::move(dense.d_input);
    }
    d_branch = GradientReversalBackward(d, output.lambda);
  }

  for (std::size_t l = cfg.trunk_widths.size(); l-- > 0;) {
    if (l + 1 == cfg.adv_attach_index && !d_branch.empty()) {
      if (d_trunk.empty()) {
        d_trunk = std::move(d_branch);
      } else {
        d_trunk += d_branch;
      }
    }
    if (d_trunk.empty()) continue;
    BasicTensor<T> d = DropoutBackward(d_trunk, cache.trunk_dropout[l]);
    d = TanhBackward(d, cache.trunk_tanh[l]);
    auto dense = DenseBackward(d, cache.trunk_dense[l], p[lay.trunk_weight[l]], l > 0);
    Accumulate(grads, lay.trunk_weight[l], dense.d_weight);
    Accumulate(grads, lay.trunk_bias[l], dense.d_bias);
    d_trunk = std::move(dense.d_input);
  }
}

template <typename T>
BatchGradients<T> BackwardBatch(const Model<T>& model, const BatchOutputs<T>& batch,
                                std::span<const double> class_weights, BatchMode mode) {
  const ModelConfig& cfg = model.config();
  const std::size_t n_source = batch.source.size();
  const std::size_t n_target = batch.target.size();
  if (n_source == 0) throw ConfigError("batch", "source half is empty");
  if (mode == BatchMode::kAdversarial && n_target == 0) {
    throw ConfigError("batch", "adversarial batch has no target half");
  }
  if (batch.source_labels.size() != n_source || batch.source_domains.size() != n_source) {
    throw ConfigError("batch", "source labels/domains do not match the source outputs");
  }
  const bool use_word = mode != BatchMode::kSpeakerOnly;
  const bool use_speaker = mode != BatchMode::kWordOnly;

  BatchGradients<T> result{model.parameters().ZerosLike()};

  std::vector<BasicTensor<T>> d_word(n_source);
  if (use_word) {
    if (class_weights.size() != cfg.word_classes) {
      throw ConfigError("class_weights", "need one weight per word class");
    }
    BasicTensor<T> logits({n_source, cfg.word_classes});
    std::vector<T> weights(n_source);
    for (std::size_t i = 0; i < n_source; ++i) {
      const auto row = batch.source[i].word_logits_last.row(0);
      std::copy(row.begin(), row.end(), logits.row(i).begin());
      const int label = batch.source_labels[i];
      if (label < 0 || static_cast<std::size_t>(label) >= cfg.word_classes) {
        throw DataError(DataError::Kind::kMalformed, "word label out of range");
      }
      weights[i] = static_cast<T>(class_weights[static_cast<std::size_t>(label)]);
    }
    auto loss = WeightedSoftmaxCrossEntropy(logits, std::span<const int>(batch.source_labels),
                                            std::span<const T>(weights));
    result.word_loss = static_cast<double>(loss.loss);
    for (std::size_t i = 0; i < n_source; ++i) {
      d_word[i] = BasicTensor<T>({1, cfg.word_classes});
      const auto row = loss.d_logits.row(i);
      std::copy(row.begin(), row.end(), d_word[i].data());
    }
  }

  const std::size_t n_total = n_source + (use_speaker ? n_target : 0);
  std::vector<BasicTensor<T>> d_speaker(n_total);
  if (use_speaker) {
    auto output_at = [&](std::size_t i) -> const SequenceOutput<T>& {
      return i < n_source ? batch.source[i] : batch.target[i - n_source];
    };
    std::size_t frames = 0;
    for (std::size_t i = 0; i < n_total; ++i) {
      if (output_at(i).speaker_logits.empty()) {
        throw ConfigError("speaker_branch", "outputs were produced without the speaker branch");
      }
      frames += output_at(i).length;
    }
    BasicTensor<T> logits({frames, cfg.adv_domains});
    std::vector<int> labels(frames);
    std::size_t row = 0;
    for (std::size_t i = 0; i < n_total; ++i) {
      const auto& o = output_at(i);
      const int domain = i < n_source ? batch.source_domains[i] : batch.target_domain;
      if (domain < 0 || static_cast<std::size_t>(domain) >= cfg.adv_domains) {
        throw DataError(DataError::Kind::kMalformed, "domain index out of range");
      }
      std::copy(o.speaker_logits.values().begin(), o.speaker_logits.values().end(),
                logits.row(row).begin());
      std::fill_n(labels.begin() + static_cast<std::ptrdiff_t>(row), o.length, domain);
      row += o.length;
    }
    const std::vector<T> uniform(frames, T(1));
    auto loss = WeightedSoftmaxCrossEntropy(logits, std::span<const int>(labels),
                                            std::span<const T>(uniform));
    result.speaker_loss = static_cast<double>(loss.loss);
    const auto predicted = ArgmaxRows(logits);
    for (std::size_t f = 0; f < frames; ++f) result.speaker_correct += predicted[f] == labels[f];
    result.speaker_frames = frames;
    row = 0;
    for (std::size_t i = 0; i < n_total; ++i) {
      const std::size_t len = output_at(i).length;
      d_speaker[i] = BasicTensor<T>({len, cfg.adv_domains});
      std::copy_n(loss.d_logits.row(row).begin(), len * cfg.adv_domains, d_speaker[i].data());
      row += len;
    }
  }

  // Gradient accumulation runs in batch order: source then target.
  for (std::size_t i = 0; i < n_source; ++i) {
    BackwardSequence(model, batch.source[i], use_word ? &d_word[i] : nullptr,
                     use_speaker ? &d_speaker[i] : nullptr, result.grads);
  }
  if (use_speaker) {
    for (std::size_t j = 0; j < n_target; ++j) {
      BackwardSequence<T>(model, batch.target[j], nullptr, &d_speaker[n_source + j], result.grads);
    }
  }
  return result;
}

#define ADVLIP_INSTANTIATE_MODEL(T)                                                          \
  template class ParameterSet<T>;                                                            \
  template class Model<T>;                                                                   \
  template SequenceOutput<T> ForwardSequence(const Model<T>&, const BasicTensor<T>&,         \
                                             const ForwardOptions&, Rng&);                   \
  template void BackwardSequence(const Model<T>&, const SequenceOutput<T>&,                  \
                                 const BasicTensor<T>*, const BasicTensor<T>*,               \
                                 ParameterSet<T>&);                                          \
  template BatchGradients<T> BackwardBatch(const Model<T>&, const BatchOutputs<T>&,          \
                                           std::span<const double>, BatchMode);

ADVLIP_INSTANTIATE_MODEL(float)
ADVLIP_INSTANTIATE_MODEL(double)

#undef ADVLIP_INSTANTIATE_MODEL

}  // namespace advlip
