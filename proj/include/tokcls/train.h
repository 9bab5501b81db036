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

// Cross-entropy objectives for both heads, Adam updates, the epoch loop with
// test-set model selection, and the hyperparameter grid harness.

#ifndef TOKCLS_TRAIN_H_
#define TOKCLS_TRAIN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tokcls/corpus.h"
#include "tokcls/encoder.h"
#include "tokcls/heads.h"
#include "tokcls/metrics.h"
#include "tokcls/tokenizer.h"

namespace tokcls {

struct TrainConfig {
  HeadKind head = HeadKind::kToken;
  double lr = 1e-3;
  int batch_size = 8;
  int stride = 250;  // token head only
  int max_epochs = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 1;
  Aggregation aggregation = Aggregation::kMeanLabel;
  int workers = 1;  // evaluation threads

  // Throws kBadConfig naming the offending field.
  void Validate(const ModelConfig& model) const;
};

// One training input: the real (unpadded) ids of a chunk plus the text label.
struct TrainingSample {
  int64_t example_id = 0;
  std::vector<int> ids;
  int label = 0;
};

// Token head: every chunk of every text. Sequence head: the first chunk.
std::vector<TrainingSample> BuildSamples(const Dataset& dataset,
                                         const Vocab& vocab, HeadKind head,
                                         int max_len, int stride);

// Mean cross-entropy over mask-1 positions, each targeting `label`. Writes
// d(loss)/d(logits) when `d_logits` is given (zero rows at pad positions).
template <typename T>
T LossToken(const Matrix<T>& logits, std::span<const uint8_t> mask, int label,
            Matrix<T>* d_logits = nullptr);

// Cross-entropy of row 0 of `logits`. `d_logits` has the shape of `logits`.
template <typename T>
T LossSequence(const Matrix<T>& logits, int label, Matrix<T>* d_logits = nullptr);

template <typename T>
T SampleLoss(const ModelParams<T>& params, HeadKind head,
             const TrainingSample& sample);

// Mean loss over `batch`; `grads`, when given, is overwritten with its gradient.
template <typename T>
T BatchLossAndGradient(const ModelParams<T>& params, HeadKind head,
                       std::span<const TrainingSample* const> batch,
                       ModelParams<T>* grads);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
class Adam {
 public:
  Adam(const ModelParams<T>& like, const AdamOptions& options);

  void Step(ModelParams<T>& params, const ModelParams<T>& grads);
  int64_t steps() const { return steps_; }

 private:
  AdamOptions options_;
  ModelParams<T> first_moment_;
  ModelParams<T> second_moment_;
  int64_t steps_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double test_qwk = 0.0;
  std::optional<double> test_smd;
};

struct FitResult {
  ModelParams<float> params;  // snapshot from best_epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// `model.vocab_size` may be 0, in which case the vocabulary size is used.
// Keeps the parameters of the epoch with the highest test QWK (earliest on
// ties). Throws kDivergence when the loss becomes non-finite.
FitResult Fit(const TrainConfig& config, const ModelConfig& model,
              const Vocab& vocab, const Dataset& train, const Dataset& test,
              const EpochCallback& on_epoch = {});

struct GridSpec {
  std::vector<double> lrs;
  std::vector<int> batch_sizes;
  std::vector<int> strides;  // collapses to one entry for the sequence head
  TrainConfig base;
  ModelConfig model;
  int workers = 1;  // grid cells trained concurrently
};

struct GridResult {
  int experiment_id = 0;
  HeadKind head = HeadKind::kToken;
  int best_epoch = 0;
  int max_epochs = 0;
  int num_labels = 0;
  double test_accuracy = 0.0;
  double test_qwk = 0.0;
  int stride = 0;
  int max_len = 0;
  int batch_size = 0;
  double lr = 0.0;
  bool failed = false;
  std::string error;
};

// Completed rows first by test QWK descending, then test accuracy
// descending, lower lr, smaller batch size, experiment id; failed rows last.
bool GridRowBefore(const GridResult& a, const GridResult& b);

struct GridOutcome {
  std::vector<GridResult> rows;  // sorted by GridRowBefore
  std::optional<FitResult> best;
  std::optional<GridResult> best_row;
};

// Experiment ids are 1-based in lr-major, batch-size, stride order. A cell
// whose training throws is recorded as failed and the sweep continues.
GridOutcome GridSearch(const GridSpec& spec, const Vocab& vocab,
                       const Dataset& train, const Dataset& test);

}  // namespace tokcls

#endif  // TOKCLS_TRAIN_H_
