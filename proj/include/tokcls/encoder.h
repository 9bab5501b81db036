/*
 * Copyright 2026 The tokcls Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// A small pre-layer-norm transformer encoder with hand-written backward
// pass. Instantiated for float (training, inference, checkpoints) and double
// (gradient checking).

#ifndef TOKCLS_ENCODER_H_
#define TOKCLS_ENCODER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tokcls {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  int vocab_size = 0;
  int max_len = 256;
  int hidden = 128;
  int layers = 2;
  int heads = 4;
  int ffn = 256;
  int num_labels = 3;
  uint64_t seed = 1;

  // Throws kBadConfig naming the offending field.
  void Validate() const;

  // Desk-scale configuration used by tests and quick experiments.
  static ModelConfig Toy(int vocab_size, int max_len = 32);

  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct LayerParams {
  Matrix<T> ln1_scale;  // 1 x hidden
  Matrix<T> ln1_shift;
  Matrix<T> query;  // hidden x hidden, applied as x * W
  Matrix<T> key;
  Matrix<T> value;
  Matrix<T> output;
  Matrix<T> ln2_scale;
  Matrix<T> ln2_shift;
  Matrix<T> ffn_in;  // hidden x ffn
  Matrix<T> ffn_in_bias;
  Matrix<T> ffn_out;  // ffn x hidden
  Matrix<T> ffn_out_bias;
};

// Encoder weights plus the classification head, which is the same affine
// map (hidden -> num_labels) for both head kinds.
template <typename T>
struct ModelParams {
  ModelConfig config;
  Matrix<T> token_embeddings;     // vocab_size x hidden
  Matrix<T> position_embeddings;  // max_len x hidden
  std::vector<LayerParams<T>> layers;
  Matrix<T> head_weight;  // hidden x num_labels
  Matrix<T> head_bias;    // 1 x num_labels

  // Visits every tensor in a fixed order as f(name, matrix).
  template <typename F>
  void ForEachTensor(F&& f);
  template <typename F>
  void ForEachTensor(F&& f) const;

  // Same shapes, all zeros.
  ModelParams ZerosLike() const;
  void SetZero();

  template <typename U>
  ModelParams<U> Cast() const;

  int64_t NumParameters() const;
  bool AllFinite() const;
};

// Truncated normal (std 0.02, cut at +-2 std) for weight matrices, zero
// biases and shifts, unit layer-norm scales; seeded from config.seed.
template <typename T>
ModelParams<T> InitParams(const ModelConfig& config);

template <typename T>
struct LayerTrace {
  Matrix<T> input;
  Matrix<T> ln1_norm;  // normalized rows, L x hidden
  Matrix<T> ln1_rstd;  // L x 1
  Matrix<T> ln1_out;
  Matrix<T> q, k, v;
  std::vector<Matrix<T>> probs;  // per head, L x L
  Matrix<T> context;
  Matrix<T> mid;
  Matrix<T> ln2_norm;
  Matrix<T> ln2_rstd;
  Matrix<T> ln2_out;
  Matrix<T> ffn_pre;
  Matrix<T> ffn_act;
};

// Intermediate activations of one sequence, kept for the backward pass.
template <typename T>
struct EncoderTrace {
  std::vector<int> ids;
  std::vector<uint8_t> mask;
  std::vector<LayerTrace<T>> layers;
};

// Hidden states (L x hidden) for one sequence. Keys with mask 0 are excluded
// from attention. Throws kLengthExceeded / kIdOutOfRange.
template <typename T>
Matrix<T> EncodeSequence(const ModelParams<T>& params, std::span<const int> ids,
                         std::span<const uint8_t> mask,
                         EncoderTrace<T>* trace = nullptr);

template <typename T>
std::vector<Matrix<T>> Forward(const ModelParams<T>& params,
                               const std::vector<std::vector<int>>& input_ids,
                               const std::vector<std::vector<uint8_t>>& masks);

// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(hidden states).
template <typename T>
void BackwardSequence(const ModelParams<T>& params, const EncoderTrace<T>& trace,
                      const Matrix<T>& d_hidden, ModelParams<T>* grads);

// ---------------------------------------------------------------------------

template <typename T>
template <typename F>
void ModelParams<T>::ForEachTensor(F&& f) {
  f(std::string("embeddings.token"), token_embeddings);
  f(std::string("embeddings.position"), position_embeddings);
  for (size_t i = 0; i < layers.size(); ++i) {
    const std::string prefix = "layer." + std::to_string(i) + ".";
    LayerParams<T>& layer = layers[i];
    f(prefix + "ln1.scale", layer.ln1_scale);
    f(prefix + "ln1.shift", layer.ln1_shift);
    f(prefix + "attention.query", layer.query);
    f(prefix + "attention.key", layer.key);
    f(prefix + "attention.value", layer.value);
    f(prefix + "attention.output", layer.output);
    f(prefix + "ln2.scale", layer.ln2_scale);
    f(prefix + "ln2.shift", layer.ln2_shift);
    f(prefix + "ffn.in", layer.ffn_in);
    f(prefix + "ffn.in_bias", layer.ffn_in_bias);
    f(prefix + "ffn.out", layer.ffn_out);
    f(prefix + "ffn.out_bias", layer.ffn_out_bias);
  }
  f(std::string("head.weight"), head_weight);
  f(std::string("head.bias"), head_bias);
}

template <typename T>
template <typename F>
void ModelParams<T>::ForEachTensor(F&& f) const {
  const_cast<ModelParams<T>*>(this)->ForEachTensor(
      [&f](const std::string& name, Matrix<T>& m) {
        f(name, static_cast<const Matrix<T>&>(m));
      });
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::Cast() const {
  ModelParams<U> out;
  out.config = config;
  out.layers.resize(layers.size());
  std::vector<const Matrix<T>*> sources;
  ForEachTensor([&](const std::string&, const Matrix<T>& m) { sources.push_back(&m); });
  size_t i = 0;
  out.ForEachTensor([&](const std::string&, Matrix<U>& m) {
    m = sources[i++]->template cast<U>();
  });
  return out;
}

}  // namespace tokcls

#endif  // TOKCLS_ENCODER_H_
