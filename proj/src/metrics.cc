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

#include "tokcls/metrics.h"

#include <cmath>
#include <string>

#include "parallel.h"
#include "tokcls/error.h"

namespace tokcls {
namespace {

void CheckPair(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(predicted.size()) + " predictions vs " +
                    std::to_string(gold.size()) + " gold labels");
  }
  if (predicted.empty()) throw Error(ErrorCode::kEmptyInput, "no labels to score");
}

double Mean(std::span<const int> xs) {
  double sum = 0.0;
  for (const int x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double PopulationVariance(std::span<const int> xs, double mean) {
  double sum = 0.0;
  for (const int x : xs) sum += (x - mean) * (x - mean);
  return sum / static_cast<double>(xs.size());
}

bool IsConstant(std::span<const int> xs) {
  for (const int x : xs) {
    if (x != xs.front()) return false;
  }
  return true;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_labels)
    : num_labels_(num_labels),
      counts_(static_cast<size_t>(num_labels) * num_labels, 0) {}

void ConfusionMatrix::Add(int predicted, int gold) {
  if (predicted < 0 || predicted >= num_labels_ || gold < 0 || gold >= num_labels_) {
    throw Error(ErrorCode::kBadLabel,
                "label pair (" + std::to_string(predicted) + ", " +
                    std::to_string(gold) + ") outside [0, " +
                    std::to_string(num_labels_) + ")");
  }
  ++counts_[static_cast<size_t>(predicted) * num_labels_ + gold];
  ++total_;
}

int64_t ConfusionMatrix::trace() const {
  int64_t sum = 0;
  for (int i = 0; i < num_labels_; ++i) sum += at(i, i);
  return sum;
}

std::vector<int64_t> ConfusionMatrix::PredictedHistogram() const {
  std::vector<int64_t> hist(num_labels_, 0);
  for (int p = 0; p < num_labels_; ++p) {
    for (int g = 0; g < num_labels_; ++g) hist[p] += at(p, g);
  }
  return hist;
}

std::vector<int64_t> ConfusionMatrix::GoldHistogram() const {
  std::vector<int64_t> hist(num_labels_, 0);
  for (int p = 0; p < num_labels_; ++p) {
    for (int g = 0; g < num_labels_; ++g) hist[g] += at(p, g);
  }
  return hist;
}

ConfusionMatrix BuildConfusion(std::span<const int> predicted,
                               std::span<const int> gold, int num_labels) {
  CheckPair(predicted, gold);
  if (num_labels < 2) throw Error(ErrorCode::kBadConfig, "num_labels must be >= 2");
  ConfusionMatrix confusion(num_labels);
  for (size_t i = 0; i < predicted.size(); ++i) confusion.Add(predicted[i], gold[i]);
  return confusion;
}

double Accuracy(std::span<const int> predicted, std::span<const int> gold) {
  CheckPair(predicted, gold);
  int64_t hits = 0;
  for (size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double Qwk(std::span<const int> predicted, std::span<const int> gold,
           int num_labels) {
  const ConfusionMatrix observed = BuildConfusion(predicted, gold, num_labels);
  const std::vector<int64_t> pred_hist = observed.PredictedHistogram();
  const std::vector<int64_t> gold_hist = observed.GoldHistogram();
  // The common factor (K - 1)^2 cancels, leaving exact integer sums:
  // kappa = 1 - n * sum d^2 O / sum d^2 p_i g_j.
  int64_t observed_disagreement = 0;
  int64_t expected_disagreement = 0;
  for (int i = 0; i < num_labels; ++i) {
    for (int j = 0; j < num_labels; ++j) {
      const int64_t d2 = static_cast<int64_t>(i - j) * (i - j);
      observed_disagreement += d2 * observed.at(i, j);
      expected_disagreement += d2 * pred_hist[i] * gold_hist[j];
    }
  }
  if (expected_disagreement == 0) {
    if (observed_disagreement == 0) return 1.0;
    throw Error(ErrorCode::kDegenerateDistribution,
                "quadratic kappa undefined: zero expected disagreement");
  }
  return 1.0 - static_cast<double>(observed_disagreement * observed.total()) /
                   static_cast<double>(expected_disagreement);
}

double Smd(std::span<const int> predicted, std::span<const int> gold) {
  CheckPair(predicted, gold);
  if (predicted.size() < 2) {
    throw Error(ErrorCode::kEmptyInput, "smd needs at least two samples");
  }
  if (IsConstant(predicted) && IsConstant(gold)) {
    throw Error(ErrorCode::kDegenerateVariance,
                "smd undefined: both label sequences are constant");
  }
  const double mean_p = Mean(predicted);
  const double mean_g = Mean(gold);
  const double pooled = std::sqrt(
      (PopulationVariance(predicted, mean_p) + PopulationVariance(gold, mean_g)) / 2.0);
  return (mean_p - mean_g) / pooled;
}

EvalReport MakeReport(std::span<const int> predicted, std::span<const int> gold,
                      int num_labels) {
  EvalReport report;
  report.confusion = BuildConfusion(predicted, gold, num_labels);
  report.n = report.confusion.total();
  report.accuracy = static_cast<double>(report.confusion.trace()) /
                    static_cast<double>(report.n);
  report.qwk = Qwk(predicted, gold, num_labels);
  if (predicted.size() >= 2 && !(IsConstant(predicted) && IsConstant(gold))) {
    report.smd = Smd(predicted, gold);
  }
  return report;
}

template <typename T>
std::vector<TextPrediction> PredictPairs(const ModelParams<T>& params,
                                         HeadKind head,
                                         const std::vector<TextPair>& pairs,
                                         const Vocab& vocab,
                                         const EvalOptions& options) {
  std::vector<TextPrediction> out(pairs.size());
  internal::ParallelFor(pairs.size(), options.workers, [&](size_t i) {
    const TextPair& pair = pairs[i];
    try {
      const std::vector<int> ids = Encode(pair.premise, pair.hypothesis, vocab);
      const ChunkSet cs = ChunkForHead(ids, head, params.config.max_len,
                                       options.stride, pair.id);
      out[i] = PredictText(params, head, cs, options.aggregation);
    } catch (const Error& e) {
      throw Error(e.code(), "example " + std::to_string(pair.id) + ": " + e.detail());
    }
  });
  return out;
}

template <typename T>
EvalReport Evaluate(const ModelParams<T>& params, HeadKind head,
                    const Dataset& dataset, const Vocab& vocab,
                    const EvalOptions& options,
                    std::vector<TextPrediction>* predictions) {
  if (dataset.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "nothing to evaluate in '" + dataset.name + "'");
  }
  std::vector<TextPair> pairs;
  std::vector<int> gold;
  pairs.reserve(dataset.size());
  gold.reserve(dataset.size());
  for (const LabeledExample& ex : dataset.examples) {
    pairs.push_back({ex.id, ex.premise, ex.hypothesis});
    gold.push_back(ex.label);
  }
  std::vector<TextPrediction> out = PredictPairs(params, head, pairs, vocab, options);
  std::vector<int> predicted;
  predicted.reserve(out.size());
  for (const TextPrediction& p : out) predicted.push_back(p.label);
  EvalReport report = MakeReport(predicted, gold, params.config.num_labels);
  if (predictions) *predictions = std::move(out);
  return report;
}

template EvalReport Evaluate<float>(const ModelParams<float>&, HeadKind,
                                    const Dataset&, const Vocab&,
                                    const EvalOptions&, std::vector<TextPrediction>*);
template EvalReport Evaluate<double>(const ModelParams<double>&, HeadKind,
                                     const Dataset&, const Vocab&,
                                     const EvalOptions&, std::vector<TextPrediction>*);
template std::vector<TextPrediction> PredictPairs<float>(
    const ModelParams<float>&, HeadKind, const std::vector<TextPair>&,
    const Vocab&, const EvalOptions&);
template std::vector<TextPrediction> PredictPairs<double>(
    const ModelParams<double>&, HeadKind, const std::vector<TextPair>&,
    const Vocab&, const EvalOptions&);

}  // namespace tokcls
