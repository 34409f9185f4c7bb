// src/layers.cpp

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

#include "advlip/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "advlip/error.hpp"

namespace advlip {

namespace {

template <typename T>
T Sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
void RequireSameShape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": " + ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
  }
}

// Turns the pre-activation row z (4U) into activated gates in place and
// produces the new cell and hidden values.
template <typename T>
void CellForward(T* z, const T* c_prev, T* cell, T* tanh_cell, T* h, std::size_t units) {
  T* gi = z;
  T* gf = z + units;
  T* gg = z + 2 * units;
  T* go = z + 3 * units;
  for (std::size_t u = 0; u < units; ++u) {
    gi[u] = Sigmoid(gi[u]);
    gf[u] = Sigmoid(gf[u]);
    gg[u] = std::tanh(gg[u]);
    go[u] = Sigmoid(go[u]);
    cell[u] = gf[u] * c_prev[u] + gi[u] * gg[u];
    tanh_cell[u] = std::tanh(cell[u]);
    h[u] = go[u] * tanh_cell[u];
  }
}

// Given dL/dh' (dh) and the carried dL/dc' (dc), writes dL/dz (4U) and
// dL/dc_prev.
template <typename T>
void CellBackward(const T* gates, const T* c_prev, const T* tanh_cell, const T* dh,
                  const T* dc, T* dz, T* dc_prev, std::size_t units) {
  const T* gi = gates;
  const T* gf = gates + units;
  const T* gg = gates + 2 * units;
  const T* go = gates + 3 * units;
  for (std::size_t u = 0; u < units; ++u) {
    const T d_cell = dc[u] + dh[u] * go[u] * (T(1) - tanh_cell[u] * tanh_cell[u]);
    dz[u] = d_cell * gg[u] * gi[u] * (T(1) - gi[u]);
    dz[units + u] = d_cell * c_prev[u] * gf[u] * (T(1) - gf[u]);
    dz[2 * units + u] = d_cell * gi[u] * (T(1) - gg[u] * gg[u]);
    dz[3 * units + u] = dh[u] * tanh_cell[u] * go[u] * (T(1) - go[u]);
    dc_prev[u] = d_cell * gf[u];
  }
}

template <typename T>
void CheckLstmParams(const LstmParams<T>& p) {
  const std::size_t u = p.units();
  if (p.w_recurrent.rank() != 2 || p.w_recurrent.cols() != 4 * u || p.w_input.rank() != 2 ||
      p.w_input.cols() != 4 * u || p.bias.size() != 4 * u) {
    throw ShapeError("lstm: inconsistent parameter shapes " + ShapeToString(p.w_input.shape()) +
                     ", " + ShapeToString(p.w_recurrent.shape()) + ", " +
                     ShapeToString(p.bias.shape()));
  }
}

}  // namespace

template <typename T>
DenseOutput<T> DenseForward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                            const BasicTensor<T>& bias) {
  if (bias.size() != weight.dim(1)) {
    throw ShapeError("dense: bias " + ShapeToString(bias.shape()) + " for weight " +
                     ShapeToString(weight.shape()));
  }
  BasicTensor<T> y = MatMul(x, weight);
  AddRowBroadcast(y, bias);
  return {std::move(y), {x}};
}

template <typename T>
DenseGrads<T> DenseBackward(const BasicTensor<T>& d_output, const DenseCache<T>& cache,
                            const BasicTensor<T>& weight, bool need_input_grad) {
  if (d_output.rank() != 2 || d_output.rows() != cache.input.rows() ||
      d_output.cols() != weight.cols()) {
    throw ShapeError("dense backward: upstream " + ShapeToString(d_output.shape()) +
                     " for input " + ShapeToString(cache.input.shape()) + " and weight " +
                     ShapeToString(weight.shape()));
  }
  DenseGrads<T> g;
  g.d_weight = MatMulTransA(cache.input, d_output);
  g.d_bias = ColumnSums(d_output);
  if (need_input_grad) g.d_input = MatMulTransB(d_output, weight);
  return g;
}

template <typename T>
TanhOutput<T> TanhForward(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (T& v : y.values()) v = std::tanh(v);
  return {y, {y}};
}

template <typename T>
BasicTensor<T> TanhBackward(const BasicTensor<T>& d_output, const TanhCache<T>& cache) {
  RequireSameShape(d_output, cache.output, "tanh backward");
  BasicTensor<T> dx = d_output;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const T y = cache.output[i];
    dx[i] *= T(1) - y * y;
  }
  return dx;
}

template <typename T>
DropoutOutput<T> DropoutForward(const BasicTensor<T>& x, double ratio, bool training, Rng& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw ConfigError("dropout_ratio", "must lie in [0, 1), got " + std::to_string(ratio));
  }
  if (!training) return {x, {}};
  BasicTensor<T> mask(x.shape());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - ratio));
  for (T& m : mask.values()) m = rng.Uniform() < ratio ? T(0) : keep_scale;
  BasicTensor<T> y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  return {std::move(y), {std::move(mask)}};
}

template <typename T>
BasicTensor<T> DropoutBackward(const BasicTensor<T>& d_output, const DropoutCache<T>& cache) {
  if (cache.mask.empty()) return d_output;
  RequireSameShape(d_output, cache.mask, "dropout backward");
  BasicTensor<T> dx = d_output;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= cache.mask[i];
  return dx;
}

template <typename T>
LstmStepOutput<T> LstmStep(const BasicTensor<T>& x, const LstmState<T>& state,
                           const LstmParams<T>& params) {
  CheckLstmParams(params);
  const std::size_t units = params.units();
  if (state.h.shape() != state.c.shape() || state.h.rank() != 2 || state.h.cols() != units ||
      x.rank() != 2 || x.rows() != state.h.rows() || x.cols() != params.input_size()) {
    throw ShapeError("lstm step: input " + ShapeToString(x.shape()) + ", state h " +
                     ShapeToString(state.h.shape()) + ", c " + ShapeToString(state.c.shape()) +
                     " for " + std::to_string(units) + " units");
  }
  const std::size_t batch = x.rows();
  LstmCache<T> cache{x, state.h, state.c, BasicTensor<T>({batch, 4 * units}),
                     BasicTensor<T>({batch, units}), BasicTensor<T>({batch, units})};
  Gemm(AsMatrix(x), Transpose::kNo, AsMatrix(params.w_input), Transpose::kNo,
       AsMatrix(cache.gates), false);
  Gemm(AsMatrix(state.h), Transpose::kNo, AsMatrix(params.w_recurrent), Transpose::kNo,
       AsMatrix(cache.gates), true);
  AddRowBroadcast(cache.gates, params.bias);
  LstmState<T> next = LstmState<T>::Zeros(batch, units);
  for (std::size_t b = 0; b < batch; ++b) {
    CellForward(cache.gates.row(b).data(), state.c.row(b).data(), cache.cell.row(b).data(),
                cache.tanh_cell.row(b).data(), next.h.row(b).data(), units);
  }
  next.c = cache.cell;
  return {std::move(next), std::move(cache)};
}

template <typename T>
LstmStepGrads<T> LstmStepBackward(const BasicTensor<T>& d_h, const BasicTensor<T>& d_c,
                                  const LstmCache<T>& cache, const LstmParams<T>& params) {
  CheckLstmParams(params);
  RequireSameShape(d_h, cache.cell, "lstm step backward (dh)");
  RequireSameShape(d_c, cache.cell, "lstm step backward (dc)");
  const std::size_t units = params.units();
  const std::size_t batch = d_h.rows();
  BasicTensor<T> dz({batch, 4 * units});
  LstmStepGrads<T> g;
  g.d_c_prev = BasicTensor<T>({batch, units});
  for (std::size_t b = 0; b < batch; ++b) {
    CellBackward(cache.gates.row(b).data(), cache.c_prev.row(b).data(),
                 cache.tanh_cell.row(b).data(), d_h.row(b).data(), d_c.row(b).data(),
                 dz.row(b).data(), g.d_c_prev.row(b).data(), units);
  }
  g.d_input = MatMulTransB(dz, params.w_input);
  g.d_h_prev = MatMulTransB(dz, params.w_recurrent);
  g.params.d_w_input = MatMulTransA(cache.input, dz);
  g.params.d_w_recurrent = MatMulTransA(cache.h_prev, dz);
  g.params.d_bias = ColumnSums(dz);
  return g;
}

template <typename T>
LstmSequenceOutput<T> LstmForwardSequence(const BasicTensor<T>& inputs,
                                          const LstmParams<T>& params) {
  CheckLstmParams(params);
  if (inputs.rank() != 2 || inputs.cols() != params.input_size()) {
    throw ShapeError("lstm sequence: input " + ShapeToString(inputs.shape()) +
                     " for input size " + std::to_string(params.input_size()));
  }
  const std::size_t steps = inputs.rows();
  const std::size_t units = params.units();
  LstmCache<T> cache{inputs,
                     BasicTensor<T>({steps, units}),
                     BasicTensor<T>({steps, units}),
                     BasicTensor<T>({steps, 4 * units}),
                     BasicTensor<T>({steps, units}),
                     BasicTensor<T>({steps, units})};
  BasicTensor<T> hidden({steps, units});
  // Input projections for all steps at once; the recurrent term is added per step.
  Gemm(AsMatrix(inputs), Transpose::kNo, AsMatrix(params.w_input), Transpose::kNo,
       AsMatrix(cache.gates), false);
  AddRowBroadcast(cache.gates, params.bias);
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) {
      std::copy_n(hidden.row(t - 1).data(), units, cache.h_prev.row(t).data());
      std::copy_n(cache.cell.row(t - 1).data(), units, cache.c_prev.row(t).data());
      Gemm(RowAsMatrix(cache.h_prev, t), Transpose::kNo, AsMatrix(params.w_recurrent),
           Transpose::kNo, MatrixView<T>{cache.gates.row(t).data(), 1, 4 * units}, true);
    }
    CellForward(cache.gates.row(t).data(), cache.c_prev.row(t).data(), cache.cell.row(t).data(),
                cache.tanh_cell.row(t).data(), hidden.row(t).data(), units);
  }
  return {std::move(hidden), std::move(cache)};
}

template <typename T>
LstmSequenceGrads<T> LstmBackwardSequence(const BasicTensor<T>& d_hidden,
                                          const LstmCache<T>& cache,
                                          const LstmParams<T>& params) {
  CheckLstmParams(params);
  RequireSameShape(d_hidden, cache.cell, "lstm sequence backward");
  const std::size_t steps = d_hidden.rows();
  const std::size_t units = params.units();
  BasicTensor<T> dz({steps, 4 * units});
  BasicTensor<T> dh_next({1, units});
  BasicTensor<T> dc_next({1, units});
  std::vector<T> dh(units);
  std::vector<T> dc_prev(units);
  for (std::size_t step = steps; step-- > 0;) {
    const auto ext = d_hidden.row(step);
    for (std::size_t u = 0; u < units; ++u) dh[u] = ext[u] + dh_next[u];
    CellBackward(cache.gates.row(step).data(), cache.c_prev.row(step).data(),
                 cache.tanh_cell.row(step).data(), dh.data(), dc_next.data(),
                 dz.row(step).data(), dc_prev.data(), units);
    std::copy(dc_prev.begin(), dc_prev.end(), dc_next.data());
    if (step > 0) {
      Gemm(RowAsMatrix(dz, step), Transpose::kNo, AsMatrix(params.w_recurrent), Transpose::kYes,
           AsMatrix(dh_next), false);
    }
  }
  LstmSequenceGrads<T> g;
  g.d_inputs = MatMulTransB(dz, params.w_input);
  g.params.d_w_input = MatMulTransA(cache.input, dz);
  g.params.d_w_recurrent = MatMulTransA(cache.h_prev, dz);
  g.params.d_bias = ColumnSums(dz);
  return g;
}

template <typename T>
LossOutput<T> WeightedSoftmaxCrossEntropy(const BasicTensor<T>& logits,
                                          std::span<const int> labels,
                                          std::span<const T> weights) {
  if (logits.rank() != 2 || labels.size() != logits.rows() || weights.size() != logits.rows()) {
    throw ShapeError("softmax cross-entropy: logits " + ShapeToString(logits.shape()) + " with " +
                     std::to_string(labels.size()) + " labels and " +
                     std::to_string(weights.size()) + " weights");
  }
  const std::size_t rows = logits.rows();
  const std::size_t classes = logits.cols();
  double weight_sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes) {
      throw DataError(DataError::Kind::kMalformed,
                      "label " + std::to_string(labels[r]) + " out of range [0, " +
                          std::to_string(classes) + ")");
    }
    if (!(weights[r] > T(0))) throw ConfigError("sample_weights", "must be positive");
    weight_sum += static_cast<double>(weights[r]);
  }
  LossOutput<T> out{T(0), BasicTensor<T>(logits.shape())};
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto z = logits.row(r);
    auto d = out.d_logits.row(r);
    const T max_z = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(z[c] - max_z));
    const double log_denom = std::log(denom);
    const double w = static_cast<double>(weights[r]) / weight_sum;
    const auto label = static_cast<std::size_t>(labels[r]);
    loss += w * (log_denom - static_cast<double>(z[label] - max_z));
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(static_cast<double>(z[c] - max_z) - log_denom);
      d[c] = static_cast<T>(w * (p - (c == label ? 1.0 : 0.0)));
    }
  }
  out.loss = static_cast<T>(loss);
  return out;
}

template <typename T>
std::vector<int> ArgmaxRows(const BasicTensor<T>& x) {
  if (x.rank() != 2) throw ShapeError("argmax: expected rank 2, got " + ShapeToString(x.shape()));
  std::vector<int> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    // max_element returns the first maximum.
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

template <typename T>
BasicTensor<T> GradientReversalForward(const BasicTensor<T>& x) {
  return x;
}

template <typename T>
BasicTensor<T> GradientReversalBackward(const BasicTensor<T>& d_output, T lambda) {
  if (!(lambda >= T(0))) throw ConfigError("lambda", "must be non-negative");
  BasicTensor<T> dx = d_output;
  const T scale = -lambda;
  for (T& v : dx.values()) v *= scale;
  return dx;
}

#define ADVLIP_INSTANTIATE_LAYERS(T)                                                          \
  template DenseOutput<T> DenseForward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                       const BasicTensor<T>&);                                \
  template DenseGrads<T> DenseBackward(const BasicTensor<T>&, const DenseCache<T>&,           \
                                       const BasicTensor<T>&, bool);                          \
  template TanhOutput<T> TanhForward(const BasicTensor<T>&);                                  \
  template BasicTensor<T> TanhBackward(const BasicTensor<T>&, const TanhCache<T>&);           \
  template DropoutOutput<T> DropoutForward(const BasicTensor<T>&, double, bool, Rng&);        \
  template BasicTensor<T> DropoutBackward(const BasicTensor<T>&, const DropoutCache<T>&);     \
  template LstmStepOutput<T> LstmStep(const BasicTensor<T>&, const LstmState<T>&,             \
                                      const LstmParams<T>&);                                  \
  template LstmStepGrads<T> LstmStepBackward(const BasicTensor<T>&, const BasicTensor<T>&,    \
                                             const LstmCache<T>&, const LstmParams<T>&);      \
  template LstmSequenceOutput<T> LstmForwardSequence(const BasicTensor<T>&,                   \
                                                     const LstmParams<T>&);                   \
  template LstmSequenceGrads<T> LstmBackwardSequence(const BasicTensor<T>&,                   \
                                                     const LstmCache<T>&,                     \
                                                     const LstmParams<T>&);                   \
  template LossOutput<T> WeightedSoftmaxCrossEntropy(const BasicTensor<T>&,                   \
                                                     std::span<const int>,                    \
                                                     std::span<const T>);                     \
  template std::vector<int> ArgmaxRows(const BasicTensor<T>&);                                \
  template BasicTensor<T> GradientReversalForward(const BasicTensor<T>&);                     \
  template BasicTensor<T> GradientReversalBackward(const BasicTensor<T>&, T);

ADVLIP_INSTANTIATE_LAYERS(float)
ADVLIP_INSTANTIATE_LAYERS(double)

#undef ADVLIP_INSTANTIATE_LAYERS

}  // namespace advlip
