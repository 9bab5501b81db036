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

// The two classification heads. The token head labels every position and
// reduces the per-token labels to one text label; the sequence head reads
// position 0 only.

#ifndef TOKCLS_HEADS_H_
#define TOKCLS_HEADS_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tokcls/encoder.h"
#include "tokcls/tokenizer.h"

namespace tokcls {

enum class HeadKind { kToken, kSequence };

std::string_view HeadKindName(HeadKind head);
HeadKind ParseHeadKind(std::string_view name);

enum class Aggregation {
  kMeanLabel,  // mean of per-token argmax labels, rounded half away from zero
  kMajority,   // modal label, ties toward the smaller label
  kMeanProb,   // argmax of the averaged per-token softmax
};

std::string_view AggregationName(Aggregation mode);
Aggregation ParseAggregation(std::string_view name);

template <typename T>
struct TokenHeadOutput {
  std::vector<Matrix<T>> logits;  // per sequence, length x num_labels
  std::vector<std::vector<uint8_t>> masks;
};

template <typename T>
struct SequenceHeadOutput {
  Matrix<T> logits;  // batch x num_labels
};

template <typename T>
TokenHeadOutput<T> TokenLogits(const ModelParams<T>& params,
                               const std::vector<Matrix<T>>& hidden,
                               const std::vector<std::vector<uint8_t>>& masks);

template <typename T>
SequenceHeadOutput<T> SequenceLogits(const ModelParams<T>& params,
                                     const std::vector<Matrix<T>>& hidden);

struct TokenVote {
  int label = 0;
  // Mean of the per-token argmax labels, whatever the aggregation mode.
  double token_label_mean = 0.0;
};

// Index of the largest entry; the first one wins ties.
template <typename T>
int ArgMax(const Eigen::Ref<const Matrix<T>>& row);

// Reduces the mask-1 rows of `logits`. Throws kNoRealTokens if none.
template <typename T>
TokenVote AggregateRows(const Matrix<T>& logits, std::span<const uint8_t> mask,
                        Aggregation mode);

template <typename T>
std::vector<TokenVote> AggregateTokens(const TokenHeadOutput<T>& out,
                                       Aggregation mode);

struct TextPrediction {
  int64_t example_id = 0;
  int label = 0;
  std::optional<double> token_label_mean;  // token head only
  int num_tokens_used = 0;
  int num_chunks = 0;
};

// Token head: every chunk is encoded and the per-token predictions of all
// original positions are pooled, each position once (stride duplicates come
// from the earlier chunk). Sequence head: first chunk only.
template <typename T>
TextPrediction PredictText(const ModelParams<T>& params, HeadKind head,
                           const ChunkSet& chunks,
                           Aggregation mode = Aggregation::kMeanLabel);

// Chunks an encoded text the way PredictText and training expect for `head`:
// the sequence head only ever sees the first window, so it is truncated
// there and `stride` is ignored.
ChunkSet ChunkForHead(std::span<const int> ids, HeadKind head, int max_len,
                      int stride, int64_t example_id);

}  // namespace tokcls

#endif  // TOKCLS_HEADS_H_
