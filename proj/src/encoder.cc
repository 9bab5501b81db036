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

#include "tokcls/encoder.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "tokcls/error.h"

namespace tokcls {
namespace {

constexpr double kLayerNormEpsilon = 1e-5;
constexpr double kInitStd = 0.02;

[[noreturn]] void BadConfig(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kBadConfig, "field '" + field + "': " + why);
}

template <typename T>
Matrix<T> RowVector(int n, T value) {
  return Matrix<T>::Constant(1, n, value);
}

template <typename T>
void FillTruncatedNormal(Matrix<T>& m, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, kInitStd);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double x;
    do {
      x = normal(rng);
    } while (std::abs(x) > 2.0 * kInitStd);
    m.data()[i] = static_cast<T>(x);
  }
}

// y = scale * (x - mean) * rstd + shift, row-wise.
template <typename T>
Matrix<T> LayerNormForward(const Matrix<T>& x, const Matrix<T>& scale,
                           const Matrix<T>& shift, Matrix<T>& norm,
                           Matrix<T>& rstd) {
  const Eigen::Index rows = x.rows();
  const T width = static_cast<T>(x.cols());
  norm.resize(rows, x.cols());
  rstd.resize(rows, 1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const T mean = x.row(r).sum() / width;
    const auto centered = x.row(r).array() - mean;
    const T var = centered.square().sum() / width;
    const T inv = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEpsilon));
    rstd(r, 0) = inv;
    norm.row(r) = centered * inv;
  }
  Matrix<T> y = norm.array().rowwise() * scale.row(0).array();
  y.array().rowwise() += shift.row(0).array();
  return y;
}

template <typename T>
Matrix<T> LayerNormBackward(const Matrix<T>& dy, const Matrix<T>& norm,
                            const Matrix<T>& rstd, const Matrix<T>& scale,
                            Matrix<T>& d_scale, Matrix<T>& d_shift) {
  d_scale += (dy.array() * norm.array()).colwise().sum().matrix();
  d_shift += dy.colwise().sum();
  const T width = static_cast<T>(dy.cols());
  Matrix<T> d_norm = dy.array().rowwise() * scale.row(0).array();
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T mean_d = d_norm.row(r).sum() / width;
    const T mean_dn = d_norm.row(r).dot(norm.row(r)) / width;
    dx.row(r) = rstd(r, 0) *
                (d_norm.row(r).array() - mean_d - norm.row(r).array() * mean_dn);
  }
  return dx;
}

template <typename T>
T Gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T GeluDerivative(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  return cdf + x * pdf;
}

// Softmax over admissible keys; inadmissible keys get probability 0, which
// is what a -inf score produces.
template <typename T>
void MaskedSoftmaxRows(Matrix<T>& scores, std::span<const uint8_t> mask) {
  const Eigen::Index cols = scores.cols();
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    T max = -std::numeric_limits<T>::infinity();
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (mask[c]) max = std::max(max, scores(r, c));
    }
    T sum = 0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const T e = mask[c] ? std::exp(scores(r, c) - max) : T(0);
      scores(r, c) = e;
      sum += e;
    }
    if (sum > 0) scores.row(r) /= sum;
  }
}

}  // namespace

void ModelConfig::Validate() const {
  if (vocab_size < 1) BadConfig("vocab_size", "must be >= 1");
  if (max_len < 1) BadConfig("max_len", "must be >= 1");
  if (hidden < 1) BadConfig("hidden", "must be >= 1");
  if (layers < 1) BadConfig("layers", "must be >= 1");
  if (heads < 1) BadConfig("heads", "must be >= 1");
  if (ffn < 1) BadConfig("ffn", "must be >= 1");
  if (num_labels < 2) BadConfig("num_labels", "must be >= 2");
  if (hidden % heads != 0) {
    BadConfig("hidden", "hidden (" + std::to_string(hidden) +
                            ") must be divisible by heads (" +
                            std::to_string(heads) + ")");
  }
}

ModelConfig ModelConfig::Toy(int vocab_size, int max_len) {
  ModelConfig config;
  config.vocab_size = vocab_size;
  config.max_len = max_len;
  config.hidden = 32;
  config.layers = 2;
  config.heads = 4;
  config.ffn = 64;
  config.num_labels = 3;
  config.seed = 1;
  return config;
}

template <typename T>
ModelParams<T> ModelParams<T>::ZerosLike() const {
  ModelParams<T> out = *this;
  out.SetZero();
  return out;
}

template <typename T>
void ModelParams<T>::SetZero() {
  ForEachTensor([](const std::string&, Matrix<T>& m) { m.setZero(); });
}

template <typename T>
int64_t ModelParams<T>::NumParameters() const {
  int64_t n = 0;
  ForEachTensor([&n](const std::string&, const Matrix<T>& m) { n += m.size(); });
  return n;
}

template <typename T>
bool ModelParams<T>::AllFinite() const {
  bool finite = true;
  ForEachTensor([&finite](const std::string&, const Matrix<T>& m) {
    finite = finite && m.allFinite();
  });
  return finite;
}

template <typename T>
ModelParams<T> InitParams(const ModelConfig& config) {
  config.Validate();
  const int h = config.hidden;
  ModelParams<T> p;
  p.config = config;
  p.token_embeddings.resize(config.vocab_size, h);
  p.position_embeddings.resize(config.max_len, h);
  p.layers.resize(config.layers);
  for (LayerParams<T>& layer : p.layers) {
    layer.ln1_scale = RowVector<T>(h, T(1));
    layer.ln1_shift = RowVector<T>(h, T(0));
    layer.query.resize(h, h);
    layer.key.resize(h, h);
    layer.value.resize(h, h);
    layer.output.resize(h, h);
    layer.ln2_scale = RowVector<T>(h, T(1));
    layer.ln2_shift = RowVector<T>(h, T(0));
    layer.ffn_in.resize(h, config.ffn);
    layer.ffn_in_bias = RowVector<T>(config.ffn, T(0));
    layer.ffn_out.resize(config.ffn, h);
    layer.ffn_out_bias = RowVector<T>(h, T(0));
  }
  p.head_weight.resize(h, config.num_labels);
  p.head_bias = RowVector<T>(config.num_labels, T(0));

  std::mt19937_64 rng(config.seed);
  p.ForEachTensor([&rng](const std::string& name, Matrix<T>& m) {
    const bool is_affine = name.ends_with("bias") || name.ends_with("shift") ||
                           name.ends_with("scale");
    if (!is_affine) FillTruncatedNormal(m, rng);
  });
  return p;
}

template <typename T>
Matrix<T> EncodeSequence(const ModelParams<T>& params, std::span<const int> ids,
                         std::span<const uint8_t> mask, EncoderTrace<T>* trace) {
  const ModelConfig& cfg = params.config;
  const auto length = static_cast<Eigen::Index>(ids.size());
  if (mask.size() != ids.size()) {
    throw Error(ErrorCode::kLengthMismatch, "ids and mask lengths differ");
  }
  if (length > cfg.max_len) {
    throw Error(ErrorCode::kLengthExceeded,
                "sequence of " + std::to_string(length) + " exceeds max_len " +
                    std::to_string(cfg.max_len));
  }
  for (const int id : ids) {
    if (id < 0 || id >= cfg.vocab_size) {
      throw Error(ErrorCode::kIdOutOfRange,
                  "token id " + std::to_string(id) + " outside vocabulary of " +
                      std::to_string(cfg.vocab_size));
    }
  }

  const int head_dim = cfg.hidden / cfg.heads;
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(head_dim));

  Matrix<T> x(length, cfg.hidden);
  for (Eigen::Index i = 0; i < length; ++i) {
    x.row(i) = params.token_embeddings.row(ids[i]) + params.position_embeddings.row(i);
  }
  if (trace) {
    trace->ids.assign(ids.begin(), ids.end());
    trace->mask.assign(mask.begin(), mask.end());
    trace->layers.assign(params.layers.size(), LayerTrace<T>{});
  }

  LayerTrace<T> scratch;
  for (size_t l = 0; l < params.layers.size(); ++l) {
    const LayerParams<T>& layer = params.layers[l];
    LayerTrace<T>& t = trace ? trace->layers[l] : scratch;
    t.input = x;
    t.ln1_out = LayerNormForward(x, layer.ln1_scale, layer.ln1_shift, t.ln1_norm,
                                 t.ln1_rstd);
    t.q = t.ln1_out * layer.query;
    t.k = t.ln1_out * layer.key;
    t.v = t.ln1_out * layer.value;
    t.context.resize(length, cfg.hidden);
    t.probs.resize(cfg.heads);
    for (int h = 0; h < cfg.heads; ++h) {
      const auto qh = t.q.middleCols(h * head_dim, head_dim);
      const auto kh = t.k.middleCols(h * head_dim, head_dim);
      const auto vh = t.v.middleCols(h * head_dim, head_dim);
      Matrix<T>& probs = t.probs[h];
      probs = (qh * kh.transpose()) * inv_sqrt_d;
      MaskedSoftmaxRows(probs, mask);
      t.context.middleCols(h * head_dim, head_dim) = probs * vh;
    }
    t.mid = x + t.context * layer.output;
    t.ln2_out = LayerNormForward(t.mid, layer.ln2_scale, layer.ln2_shift,
                                 t.ln2_norm, t.ln2_rstd);
    t.ffn_pre = t.ln2_out * layer.ffn_in;
    t.ffn_pre.rowwise() += layer.ffn_in_bias.row(0);
    t.ffn_act = t.ffn_pre.unaryExpr([](T v) { return Gelu(v); });
    x = t.mid + t.ffn_act * layer.ffn_out;
    x.rowwise() += layer.ffn_out_bias.row(0);
  }
  return x;
}

template <typename T>
std::vector<Matrix<T>> Forward(const ModelParams<T>& params,
                               const std::vector<std::vector<int>>& input_ids,
                               const std::vector<std::vector<uint8_t>>& masks) {
  if (input_ids.size() != masks.size()) {
    throw Error(ErrorCode::kLengthMismatch, "batch ids and masks differ in size");
  }
  std::vector<Matrix<T>> out;
  out.reserve(input_ids.size());
  for (size_t b = 0; b < input_ids.size(); ++b) {
    out.push_back(EncodeSequence<T>(params, input_ids[b], masks[b]));
  }
  return out;
}

template <typename T>
void BackwardSequence(const ModelParams<T>& params, const EncoderTrace<T>& trace,
                      const Matrix<T>& d_hidden, ModelParams<T>* grads) {
  const ModelConfig& cfg = params.config;
  const int head_dim = cfg.hidden / cfg.heads;
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(head_dim));
  const Eigen::Index length = d_hidden.rows();

  Matrix<T> dx = d_hidden;
  for (size_t li = params.layers.size(); li-- > 0;) {
    const LayerParams<T>& layer = params.layers[li];
    const LayerTrace<T>& t = trace.layers[li];
    LayerParams<T>& g = grads->layers[li];

    // x_out = mid + gelu(ln2(mid) W1 + b1) W2 + b2
    g.ffn_out_bias += dx.colwise().sum();
    g.ffn_out.noalias() += t.ffn_act.transpose() * dx;
    Matrix<T> d_pre = dx * layer.ffn_out.transpose();
    d_pre.array() *= t.ffn_pre.unaryExpr([](T v) { return GeluDerivative(v); }).array();
    g.ffn_in_bias += d_pre.colwise().sum();
    g.ffn_in.noalias() += t.ln2_out.transpose() * d_pre;
    const Matrix<T> d_ln2_out = d_pre * layer.ffn_in.transpose();
    Matrix<T> d_mid = dx + LayerNormBackward(d_ln2_out, t.ln2_norm, t.ln2_rstd,
                                             layer.ln2_scale, g.ln2_scale,
                                             g.ln2_shift);

    // mid = input + context Wo
    g.output.noalias() += t.context.transpose() * d_mid;
    const Matrix<T> d_context = d_mid * layer.output.transpose();
    Matrix<T> dq(length, cfg.hidden), dk(length, cfg.hidden), dv(length, cfg.hidden);
    for (int h = 0; h < cfg.heads; ++h) {
      const Matrix<T>& probs = t.probs[h];
      const auto d_ctx_h = d_context.middleCols(h * head_dim, head_dim);
      const auto qh = t.q.middleCols(h * head_dim, head_dim);
      const auto kh = t.k.middleCols(h * head_dim, head_dim);
      const auto vh = t.v.middleCols(h * head_dim, head_dim);
      dv.middleCols(h * head_dim, head_dim) = probs.transpose() * d_ctx_h;
      const Matrix<T> d_probs = d_ctx_h * vh.transpose();
      const Eigen::Matrix<T, Eigen::Dynamic, 1> row_dot =
          (d_probs.array() * probs.array()).rowwise().sum();
      Matrix<T> d_scores =
          probs.array() * (d_probs.array().colwise() - row_dot.array());
      d_scores *= inv_sqrt_d;
      dq.middleCols(h * head_dim, head_dim) = d_scores * kh;
      dk.middleCols(h * head_dim, head_dim) = d_scores.transpose() * qh;
    }
    g.query.noalias() += t.ln1_out.transpose() * dq;
    g.key.noalias() += t.ln1_out.transpose() * dk;
    g.value.noalias() += t.ln1_out.transpose() * dv;
    const Matrix<T> d_ln1_out = dq * layer.query.transpose() +
                                dk * layer.key.transpose() +
                                dv * layer.value.transpose();
    dx = d_mid + LayerNormBackward(d_ln1_out, t.ln1_norm, t.ln1_rstd,
                                   layer.ln1_scale, g.ln1_scale, g.ln1_shift);
  }
  for (Eigen::Index i = 0; i < length; ++i) {
    grads->token_embeddings.row(trace.ids[i]) += dx.row(i);
    grads->position_embeddings.row(i) += dx.row(i);
  }
}

#define TOKCLS_INSTANTIATE_ENCODER(T)                                          \
  template struct ModelParams<T>;                                              \
  template ModelParams<T> InitParams<T>(const ModelConfig&);                   \
  template Matrix<T> EncodeSequence<T>(const ModelParams<T>&,                  \
                                       std::span<const int>,                   \
                                       std::span<const uint8_t>,               \
                                       EncoderTrace<T>*);                      \
  template std::vector<Matrix<T>> Forward<T>(                                  \
      const ModelParams<T>&, const std::vector<std::vector<int>>&,             \
      const std::vector<std::vector<uint8_t>>&);                               \
  template void BackwardSequence<T>(const ModelParams<T>&,                     \
                                    const EncoderTrace<T>&, const Matrix<T>&,  \
                                    ModelParams<T>*);

TOKCLS_INSTANTIATE_ENCODER(float)
TOKCLS_INSTANTIATE_ENCODER(double)

}  // namespace tokcls
