// advlip/layers.hpp

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

#ifndef ADVLIP_LAYERS_HPP_
#define ADVLIP_LAYERS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "advlip/rng.hpp"
#include "advlip/tensor.hpp"

// Differentiable building blocks. Each forward returns its output together
// with the cache that the matching backward consumes; nothing is stored
// inside the parameters. Row-major [rows x features] throughout, where rows
// are batch entries or time steps.

namespace advlip {

// ---------------------------------------------------------------- dense

template <typename T>
struct DenseCache {
  BasicTensor<T> input;
};

template <typename T>
struct DenseOutput {
  BasicTensor<T> output;
  DenseCache<T> cache;
};

template <typename T>
struct DenseGrads {
  BasicTensor<T> d_input;  // empty when not requested
  BasicTensor<T> d_weight;
  BasicTensor<T> d_bias;
};

/// y = x W + bias with x [b x in], W [in x out], bias [out].
template <typename T>
DenseOutput<T> DenseForward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                            const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> DenseBackward(const BasicTensor<T>& d_output, const DenseCache<T>& cache,
                            const BasicTensor<T>& weight, bool need_input_grad = true);

// ---------------------------------------------------------------- tanh

template <typename T>
struct TanhCache {
  BasicTensor<T> output;
};

template <typename T>
struct TanhOutput {
  BasicTensor<T> output;
  TanhCache<T> cache;
};

template <typename T>
TanhOutput<T> TanhForward(const BasicTensor<T>& x);

/// dx = dy (1 - y^2)
template <typename T>
BasicTensor<T> TanhBackward(const BasicTensor<T>& d_output, const TanhCache<T>& cache);

// ---------------------------------------------------------------- dropout

template <typename T>
struct DropoutCache {
  // Per-element multiplier (0 or 1 / (1 - ratio)); empty means identity.
  BasicTensor<T> mask;
};

template <typename T>
struct DropoutOutput {
  BasicTensor<T> output;
  DropoutCache<T> cache;
};

/// Inverted dropout: in training each element is zeroed with probability
/// `ratio` and survivors are scaled by 1 / (1 - ratio). Inference is the
/// identity and draws nothing from `rng`.
template <typename T>
DropoutOutput<T> DropoutForward(const BasicTensor<T>& x, double ratio, bool training, Rng& rng);

template <typename T>
BasicTensor<T> DropoutBackward(const BasicTensor<T>& d_output, const DropoutCache<T>& cache);

// ---------------------------------------------------------------- LSTM

/// View of the packed parameters; gate blocks along the 4U axis are ordered
/// (input, forget, candidate, output). No peephole connections.
template <typename T>
struct LstmParams {
  const BasicTensor<T>& w_input;      // [in x 4U]
  const BasicTensor<T>& w_recurrent;  // [U x 4U]
  const BasicTensor<T>& bias;         // [4U]

  std::size_t units() const { return w_recurrent.dim(0); }
  std::size_t input_size() const { return w_input.dim(0); }
};

template <typename T>
struct LstmState {
  BasicTensor<T> h;  // [batch x U]
  BasicTensor<T> c;  // [batch x U]

  static LstmState Zeros(std::size_t batch, std::size_t units) {
    return {BasicTensor<T>({batch, units}), BasicTensor<T>({batch, units})};
  }
};

/// Forward quantities for one step (rows = batch) or one whole sequence
/// (rows = time steps of a single sequence).
template <typename T>
struct LstmCache {
  BasicTensor<T> input;      // [rows x in]
  BasicTensor<T> h_prev;     // [rows x U]
  BasicTensor<T> c_prev;     // [rows x U]
  BasicTensor<T> gates;      // [rows x 4U], activated
  BasicTensor<T> cell;       // [rows x U]
  BasicTensor<T> tanh_cell;  // [rows x U]
};

template <typename T>
struct LstmGrads {
  BasicTensor<T> d_w_input;
  BasicTensor<T> d_w_recurrent;
  BasicTensor<T> d_bias;
};

template <typename T>
struct LstmStepOutput {
  LstmState<T> state;
  LstmCache<T> cache;
};

template <typename T>
struct LstmStepGrads {
  BasicTensor<T> d_input;
  BasicTensor<T> d_h_prev;
  BasicTensor<T> d_c_prev;
  LstmGrads<T> params;
};

/// i, f, o = sigmoid(.), g = tanh(.), c' = f c + i g, h' = o tanh(c').
template <typename T>
LstmStepOutput<T> LstmStep(const BasicTensor<T>& x, const LstmState<T>& state,
                           const LstmParams<T>& params);

/// Backward through one step given gradients w.r.t. the step's h' and c'.
template <typename T>
LstmStepGrads<T> LstmStepBackward(const BasicTensor<T>& d_h, const BasicTensor<T>& d_c,
                                  const LstmCache<T>& cache, const LstmParams<T>& params);

template <typename T>
struct LstmSequenceOutput {
  BasicTensor<T> hidden;  // [time x U]
  LstmCache<T> cache;
};

template <typename T>
struct LstmSequenceGrads {
  BasicTensor<T> d_inputs;  // [time x in]
  LstmGrads<T> params;
};

/// Runs a single sequence (rows of `inputs` are time steps) from a zero state.
template <typename T>
LstmSequenceOutput<T> LstmForwardSequence(const BasicTensor<T>& inputs,
                                          const LstmParams<T>& params);

/// Backpropagation through time; `d_hidden` holds the external gradient on
/// every step's hidden output (zero rows where there is none).
template <typename T>
LstmSequenceGrads<T> LstmBackwardSequence(const BasicTensor<T>& d_hidden,
                                          const LstmCache<T>& cache,
                                          const LstmParams<T>& params);

// ---------------------------------------------------------------- loss

template <typename T>
struct LossOutput {
  T loss;
  BasicTensor<T> d_logits;
};

/// loss = sum_i w_i * -log softmax(logits_i)[label_i] / sum_i w_i,
/// with the exact gradient of that expression.
template <typename T>
LossOutput<T> WeightedSoftmaxCrossEntropy(const BasicTensor<T>& logits,
                                          std::span<const int> labels,
                                          std::span<const T> weights);

/// Row-wise argmax; ties go to the lowest index.
template <typename T>
std::vector<int> ArgmaxRows(const BasicTensor<T>& x);

// ---------------------------------------------------------------- reversal

/// Identity.
template <typename T>
BasicTensor<T> GradientReversalForward(const BasicTensor<T>& x);

/// dx = -lambda * dy
template <typename T>
BasicTensor<T> GradientReversalBackward(const BasicTensor<T>& d_output, T lambda);

}  // namespace advlip

#endif  // ADVLIP_LAYERS_HPP_
