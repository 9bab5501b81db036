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

#include "tokcls/train.h"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>

#include "parallel.h"
#include "tokcls/error.h"

namespace tokcls {
namespace {

[[noreturn]] void BadConfig(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kBadConfig, "field '" + field + "': " + why);
}

template <typename T>
std::vector<Matrix<T>*> TensorPointers(ModelParams<T>& params) {
  std::vector<Matrix<T>*> out;
  params.ForEachTensor([&out](const std::string&, Matrix<T>& m) { out.push_back(&m); });
  return out;
}

template <typename T>
std::vector<const Matrix<T>*> TensorPointers(const ModelParams<T>& params) {
  std::vector<const Matrix<T>*> out;
  params.ForEachTensor(
      [&out](const std::string&, const Matrix<T>& m) { out.push_back(&m); });
  return out;
}

void CheckLabel(int label, Eigen::Index num_labels) {
  if (label < 0 || label >= num_labels) {
    throw Error(ErrorCode::kBadLabel,
                "label " + std::to_string(label) + " outside [0, " +
                    std::to_string(num_labels) + ")");
  }
}

// -log softmax(row)[label]; optionally writes softmax(row) - onehot(label).
template <typename T>
T CrossEntropyRow(const Eigen::Ref<const Matrix<T>>& row, int label,
                  Eigen::Ref<Matrix<T>> d_row, bool want_grad, T grad_scale) {
  const T max = row.maxCoeff();
  const auto shifted = (row.array() - max);
  const T log_sum = std::log(shifted.exp().sum());
  const T loss = log_sum - shifted(0, label);
  if (want_grad) {
    d_row = ((shifted - log_sum).exp() * grad_scale).matrix();
    d_row(0, label) -= grad_scale;
  }
  return loss;
}

template <typename T>
std::vector<uint8_t> AllReal(size_t n) {
  return std::vector<uint8_t>(n, 1);
}

// Loss of one sample; when `grads` is set, accumulates weight * gradient.
template <typename T>
T SampleForwardBackward(const ModelParams<T>& params, HeadKind head,
                        const TrainingSample& sample, ModelParams<T>* grads,
                        T weight) {
  if (sample.ids.empty()) throw Error(ErrorCode::kNoRealTokens, "empty training sample");
  const std::vector<uint8_t> mask = AllReal<T>(sample.ids.size());
  EncoderTrace<T> trace;
  const Matrix<T> hidden =
      EncodeSequence<T>(params, sample.ids, mask, grads ? &trace : nullptr);
  Matrix<T> logits;
  if (head == HeadKind::kToken) {
    logits = hidden * params.head_weight;
  } else {
    logits = hidden.topRows(1) * params.head_weight;
  }
  logits.rowwise() += params.head_bias.row(0);

  Matrix<T> d_logits;
  const T loss = head == HeadKind::kToken
                     ? LossToken<T>(logits, mask, sample.label, grads ? &d_logits : nullptr)
                     : LossSequence<T>(logits, sample.label, grads ? &d_logits : nullptr);
  if (!grads) return loss;

  d_logits *= weight;
  Matrix<T> d_hidden = Matrix<T>::Zero(hidden.rows(), hidden.cols());
  if (head == HeadKind::kToken) {
    grads->head_weight.noalias() += hidden.transpose() * d_logits;
    d_hidden.noalias() = d_logits * params.head_weight.transpose();
  } else {
    grads->head_weight.noalias() += hidden.topRows(1).transpose() * d_logits;
    d_hidden.topRows(1).noalias() = d_logits * params.head_weight.transpose();
  }
  grads->head_bias += d_logits.colwise().sum();
  BackwardSequence<T>(params, trace, d_hidden, grads);
  return loss;
}

}  // namespace

void TrainConfig::Validate(const ModelConfig& model) const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) BadConfig("lr", "must be finite and >= 0");
  if (batch_size < 1) BadConfig("batch_size", "must be >= 1");
  if (max_epochs < 1) BadConfig("max_epochs", "must be >= 1");
  if (head == HeadKind::kToken && (stride < 0 || stride >= model.max_len)) {
    BadConfig("stride", "must be in [0, max_len=" + std::to_string(model.max_len) + ")");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0)) BadConfig("beta1", "must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) BadConfig("beta2", "must be in [0, 1)");
  if (!(epsilon > 0.0)) BadConfig("epsilon", "must be > 0");
  if (workers < 1) BadConfig("workers", "must be >= 1");
}

std::vector<TrainingSample> BuildSamples(const Dataset& dataset,
                                         const Vocab& vocab, HeadKind head,
                                         int max_len, int stride) {
  std::vector<TrainingSample> samples;
  for (const LabeledExample& ex : dataset.examples) {
    const std::vector<int> ids = Encode(ex.premise, ex.hypothesis, vocab);
    const ChunkSet cs = ChunkForHead(ids, head, max_len, stride, ex.id);
    for (const Chunk& chunk : cs.chunks) {
      TrainingSample sample;
      sample.example_id = ex.id;
      sample.label = ex.label;
      sample.ids.assign(chunk.input_ids.begin(),
                        chunk.input_ids.begin() + chunk.num_real());
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

template <typename T>
T LossToken(const Matrix<T>& logits, std::span<const uint8_t> mask, int label,
            Matrix<T>* d_logits) {
  if (mask.size() != static_cast<size_t>(logits.rows())) {
    throw Error(ErrorCode::kLengthMismatch, "mask does not match logits");
  }
  CheckLabel(label, logits.cols());
  const auto count = std::count(mask.begin(), mask.end(), uint8_t{1});
  if (count == 0) throw Error(ErrorCode::kNoRealTokens, "no mask-1 positions");
  const T scale = T(1) / static_cast<T>(count);
  if (d_logits) d_logits->setZero(logits.rows(), logits.cols());
  Matrix<T> unused(1, logits.cols());
  T total = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    if (!mask[r]) continue;
    if (d_logits) {
      total += CrossEntropyRow<T>(logits.row(r), label, d_logits->row(r), true, scale);
    } else {
      total += CrossEntropyRow<T>(logits.row(r), label, unused, false, scale);
    }
  }
  return total * scale;
}

template <typename T>
T LossSequence(const Matrix<T>& logits, int label, Matrix<T>* d_logits) {
  if (logits.rows() < 1) throw Error(ErrorCode::kNoRealTokens, "no logits");
  CheckLabel(label, logits.cols());
  if (d_logits) {
    d_logits->setZero(logits.rows(), logits.cols());
    return CrossEntropyRow<T>(logits.row(0), label, d_logits->row(0), true, T(1));
  }
  Matrix<T> unused(1, logits.cols());
  return CrossEntropyRow<T>(logits.row(0), label, unused, false, T(1));
}

template <typename T>
T SampleLoss(const ModelParams<T>& params, HeadKind head,
             const TrainingSample& sample) {
  return SampleForwardBackward<T>(params, head, sample, nullptr, T(1));
}

template <typename T>
T BatchLossAndGradient(const ModelParams<T>& params, HeadKind head,
                       std::span<const TrainingSample* const> batch,
                       ModelParams<T>* grads) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty batch");
  if (grads) grads->SetZero();
  const T weight = T(1) / static_cast<T>(batch.size());
  T total = 0;
  for (const TrainingSample* sample : batch) {
    total += SampleForwardBackward<T>(params, head, *sample, grads, weight);
  }
  return total * weight;
}

template <typename T>
Adam<T>::Adam(const ModelParams<T>& like, const AdamOptions& options)
    : options_(options),
      first_moment_(like.ZerosLike()),
      second_moment_(like.ZerosLike()) {}

template <typename T>
void Adam<T>::Step(ModelParams<T>& params, const ModelParams<T>& grads) {
  ++steps_;
  const T b1 = static_cast<T>(options_.beta1);
  const T b2 = static_cast<T>(options_.beta2);
  const T lr = static_cast<T>(options_.lr);
  const T eps = static_cast<T>(options_.epsilon);
  const T correction1 = T(1) - static_cast<T>(std::pow(options_.beta1, steps_));
  const T correction2 = T(1) - static_cast<T>(std::pow(options_.beta2, steps_));
  const auto p = TensorPointers(params);
  const auto g = TensorPointers(grads);
  const auto m = TensorPointers(first_moment_);
  const auto v = TensorPointers(second_moment_);
  for (size_t i = 0; i < p.size(); ++i) {
    m[i]->array() = b1 * m[i]->array() + (T(1) - b1) * g[i]->array();
    v[i]->array() = b2 * v[i]->array() + (T(1) - b2) * g[i]->array().square();
    p[i]->array() -= lr * (m[i]->array() / correction1) /
                     ((v[i]->array() / correction2).sqrt() + eps);
  }
}

FitResult Fit(const TrainConfig& config, const ModelConfig& model_in,
              const Vocab& vocab, const Dataset& train, const Dataset& test,
              const EpochCallback& on_epoch) {
  ModelConfig model = model_in;
  if (model.vocab_size == 0) model.vocab_size = vocab.size();
  if (model.vocab_size != vocab.size()) {
    BadConfig("vocab_size", "model expects " + std::to_string(model.vocab_size) +
                                " tokens, vocabulary has " + std::to_string(vocab.size()));
  }
  model.Validate();
  config.Validate(model);
  if (train.empty()) throw Error(ErrorCode::kEmptyDataset, "training set is empty");
  if (test.empty()) throw Error(ErrorCode::kEmptyDataset, "test set is empty");

  const std::vector<TrainingSample> samples =
      BuildSamples(train, vocab, config.head, model.max_len, config.stride);
  ModelParams<float> params = InitParams<float>(model);
  ModelParams<float> grads = params.ZerosLike();
  Adam<float> optimizer(params, {config.lr, config.beta1, config.beta2, config.epsilon});
  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  const EvalOptions eval{config.stride, config.aggregation, config.workers};

  FitResult result;
  std::optional<double> best_qwk;
  std::vector<const TrainingSample*> batch;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (size_t i = start; i < end; ++i) batch.push_back(&samples[order[i]]);
      const float loss = BatchLossAndGradient<float>(params, config.head, batch, &grads);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kDivergence,
                    "non-finite loss at epoch " + std::to_string(epoch) +
                        ", batch starting at sample " + std::to_string(start));
      }
      loss_sum += static_cast<double>(loss) * static_cast<double>(end - start);
      optimizer.Step(params, grads);
    }
    if (!params.AllFinite()) {
      throw Error(ErrorCode::kDivergence,
                  "non-finite parameters after epoch " + std::to_string(epoch));
    }
    const EvalReport report = Evaluate(params, config.head, test, vocab, eval);
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(samples.size());
    record.test_accuracy = report.accuracy;
    record.test_qwk = report.qwk;
    record.test_smd = report.smd;
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (!best_qwk || report.qwk > *best_qwk) {
      best_qwk = report.qwk;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

bool GridRowBefore(const GridResult& a, const GridResult& b) {
  if (a.failed != b.failed) return !a.failed;
  if (!a.failed) {
    if (a.test_qwk != b.test_qwk) return a.test_qwk > b.test_qwk;
    if (a.test_accuracy != b.test_accuracy) return a.test_accuracy > b.test_accuracy;
    if (a.lr != b.lr) return a.lr < b.lr;
    if (a.batch_size != b.batch_size) return a.batch_size < b.batch_size;
  }
  return a.experiment_id < b.experiment_id;
}

GridOutcome GridSearch(const GridSpec& spec, const Vocab& vocab,
                       const Dataset& train, const Dataset& test) {
  if (spec.lrs.empty()) BadConfig("lr", "grid needs at least one value");
  if (spec.batch_sizes.empty()) BadConfig("batch_size", "grid needs at least one value");
  std::vector<int> strides = spec.strides;
  if (strides.empty()) strides.push_back(spec.base.stride);
  if (spec.base.head == HeadKind::kSequence) strides.resize(1);

  std::vector<GridResult> cells;
  for (const double lr : spec.lrs) {
    for (const int batch_size : spec.batch_sizes) {
      for (const int stride : strides) {
        GridResult row;
        row.experiment_id = static_cast<int>(cells.size()) + 1;
        row.head = spec.base.head;
        row.max_epochs = spec.base.max_epochs;
        row.num_labels = spec.model.num_labels;
        row.stride = spec.base.head == HeadKind::kToken ? stride : 0;
        row.max_len = spec.model.max_len;
        row.batch_size = batch_size;
        row.lr = lr;
        cells.push_back(row);
      }
    }
  }

  GridOutcome outcome;
  std::mutex mu;
  internal::ParallelFor(cells.size(), spec.workers, [&](size_t i) {
    GridResult& row = cells[i];
    TrainConfig config = spec.base;
    config.lr = row.lr;
    config.batch_size = row.batch_size;
    if (spec.base.head == HeadKind::kToken) config.stride = row.stride;
    std::optional<FitResult> fit;
    try {
      fit = Fit(config, spec.model, vocab, train, test);
      const EpochRecord& best = fit->history[fit->best_epoch - 1];
      row.best_epoch = fit->best_epoch;
      row.test_accuracy = best.test_accuracy;
      row.test_qwk = best.test_qwk;
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
      return;
    }
    std::lock_guard<std::mutex> lock(mu);
    if (!outcome.best_row || GridRowBefore(row, *outcome.best_row)) {
      outcome.best_row = row;
      outcome.best = std::move(fit);
    }
  });
  std::sort(cells.begin(), cells.end(), GridRowBefore);
  outcome.rows = std::move(cells);
  return outcome;
}

#define TOKCLS_INSTANTIATE_TRAIN(T)                                             \
  template T LossToken<T>(const Matrix<T>&, std::span<const uint8_t>, int,      \
                          Matrix<T>*);                                          \
  template T LossSequence<T>(const Matrix<T>&, int, Matrix<T>*);                \
  template T SampleLoss<T>(const ModelParams<T>&, HeadKind,                     \
                           const TrainingSample&);                              \
  template T BatchLossAndGradient<T>(const ModelParams<T>&, HeadKind,           \
                                     std::span<const TrainingSample* const>,    \
                                     ModelParams<T>*);                          \
  template class Adam<T>;

TOKCLS_INSTANTIATE_TRAIN(float)
TOKCLS_INSTANTIATE_TRAIN(double)

}  // namespace tokcls
