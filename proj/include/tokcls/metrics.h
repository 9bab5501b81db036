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

// Agreement metrics for ordinal labels: accuracy, quadratic weighted kappa
// and standardized mean difference, and the evaluation driver that scores a
// model on a dataset.

#ifndef TOKCLS_METRICS_H_
#define TOKCLS_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tokcls/corpus.h"
#include "tokcls/heads.h"

namespace tokcls {

// Rows index the predicted label, columns the gold label.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int num_labels);

  void Add(int predicted, int gold);

  int num_labels() const { return num_labels_; }
  int64_t at(int predicted, int gold) const {
    return counts_[static_cast<size_t>(predicted) * num_labels_ + gold];
  }
  int64_t total() const { return total_; }
  int64_t trace() const;
  std::vector<int64_t> PredictedHistogram() const;
  std::vector<int64_t> GoldHistogram() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int num_labels_ = 0;
  int64_t total_ = 0;
  std::vector<int64_t> counts_;
};

ConfusionMatrix BuildConfusion(std::span<const int> predicted,
                               std::span<const int> gold, int num_labels);

double Accuracy(std::span<const int> predicted, std::span<const int> gold);

// Cohen's kappa with weights (i - j)^2 / (K - 1)^2. Returns 1 when both
// sequences are the same constant.
double Qwk(std::span<const int> predicted, std::span<const int> gold,
           int num_labels);

// Signed (mean(pred) - mean(gold)) / sqrt((var(pred) + var(gold)) / 2) with
// population variances. Throws kDegenerateVariance if both are constant.
double Smd(std::span<const int> predicted, std::span<const int> gold);

struct EvalReport {
  double accuracy = 0.0;
  double qwk = 0.0;
  std::optional<double> smd;  // absent when both label sequences are constant
  ConfusionMatrix confusion;
  int64_t n = 0;
};

EvalReport MakeReport(std::span<const int> predicted, std::span<const int> gold,
                      int num_labels);

struct EvalOptions {
  int stride = 0;
  Aggregation aggregation = Aggregation::kMeanLabel;
  int workers = 1;
};

// Encodes, chunks and predicts every example; failures are rethrown with the
// example id prepended.
template <typename T>
EvalReport Evaluate(const ModelParams<T>& params, HeadKind head,
                    const Dataset& dataset, const Vocab& vocab,
                    const EvalOptions& options,
                    std::vector<TextPrediction>* predictions = nullptr);

// Predictions for unlabeled pairs, in input order.
template <typename T>
std::vector<TextPrediction> PredictPairs(const ModelParams<T>& params,
                                         HeadKind head,
                                         const std::vector<TextPair>& pairs,
                                         const Vocab& vocab,
                                         const EvalOptions& options);

}  // namespace tokcls

#endif  // TOKCLS_METRICS_H_
