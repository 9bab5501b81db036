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

#include "tokcls/heads.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "tokcls/error.h"

namespace tokcls {
namespace {

template <typename T>
Matrix<T> Affine(const ModelParams<T>& params, const Matrix<T>& hidden) {
  Matrix<T> logits = hidden * params.head_weight;
  logits.rowwise() += params.head_bias.row(0);
  return logits;
}

template <typename T>
Matrix<T> RealPrefixLogits(const ModelParams<T>& params, const Chunk& chunk) {
  const int real = chunk.num_real();
  const std::span<const int> ids(chunk.input_ids.data(), real);
  const std::span<const uint8_t> mask(chunk.attention_mask.data(), real);
  return Affine(params, EncodeSequence<T>(params, ids, mask));
}

}  // namespace

std::string_view HeadKindName(HeadKind head) {
  return head == HeadKind::kToken ? "token" : "sequence";
}

HeadKind ParseHeadKind(std::string_view name) {
  if (name == "token") return HeadKind::kToken;
  if (name == "sequence") return HeadKind::kSequence;
  throw Error(ErrorCode::kBadConfig,
              "field 'head': expected token or sequence, got '" +
                  std::string(name) + "'");
}

std::string_view AggregationName(Aggregation mode) {
  switch (mode) {
    case Aggregation::kMeanLabel: return "mean_label";
    case Aggregation::kMajority: return "majority";
    case Aggregation::kMeanProb: return "mean_prob";
  }
  return "mean_label";
}

Aggregation ParseAggregation(std::string_view name) {
  if (name == "mean_label") return Aggregation::kMeanLabel;
  if (name == "majority") return Aggregation::kMajority;
  if (name == "mean_prob") return Aggregation::kMeanProb;
  throw Error(ErrorCode::kBadConfig,
              "field 'aggregation': expected mean_label, majority or mean_prob, "
              "got '" + std::string(name) + "'");
}

template <typename T>
TokenHeadOutput<T> TokenLogits(const ModelParams<T>& params,
                               const std::vector<Matrix<T>>& hidden,
                               const std::vector<std::vector<uint8_t>>& masks) {
  if (hidden.size() != masks.size()) {
    throw Error(ErrorCode::kLengthMismatch, "hidden batch and masks differ in size");
  }
  TokenHeadOutput<T> out;
  out.logits.reserve(hidden.size());
  for (const Matrix<T>& h : hidden) out.logits.push_back(Affine(params, h));
  out.masks = masks;
  return out;
}

template <typename T>
SequenceHeadOutput<T> SequenceLogits(const ModelParams<T>& params,
                                     const std::vector<Matrix<T>>& hidden) {
  SequenceHeadOutput<T> out;
  out.logits.resize(static_cast<Eigen::Index>(hidden.size()),
                    params.config.num_labels);
  for (size_t b = 0; b < hidden.size(); ++b) {
    if (hidden[b].rows() < 1) {
      throw Error(ErrorCode::kNoRealTokens, "empty sequence in batch");
    }
    out.logits.row(b) = Affine<T>(params, hidden[b].topRows(1));
  }
  return out;
}

template <typename T>
int ArgMax(const Eigen::Ref<const Matrix<T>>& row) {
  int best = 0;
  for (Eigen::Index c = 1; c < row.cols(); ++c) {
    if (row(0, c) > row(0, best)) best = static_cast<int>(c);
  }
  return best;
}

template <typename T>
TokenVote AggregateRows(const Matrix<T>& logits, std::span<const uint8_t> mask,
                        Aggregation mode) {
  const auto num_labels = logits.cols();
  std::vector<int64_t> votes(num_labels, 0);
  Eigen::Matrix<double, 1, Eigen::Dynamic> prob_sum =
      Eigen::Matrix<double, 1, Eigen::Dynamic>::Zero(num_labels);
  int64_t label_sum = 0;
  int64_t used = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    if (!mask[r]) continue;
    const int label = ArgMax<T>(logits.row(r));
    ++votes[label];
    label_sum += label;
    ++used;
    if (mode == Aggregation::kMeanProb) {
      const auto row = logits.row(r).template cast<double>().array();
      const auto e = (row - row.maxCoeff()).exp();
      prob_sum += (e / e.sum()).matrix();
    }
  }
  if (used == 0) throw Error(ErrorCode::kNoRealTokens, "no mask-1 positions");

  TokenVote vote;
  vote.token_label_mean = static_cast<double>(label_sum) / static_cast<double>(used);
  switch (mode) {
    case Aggregation::kMeanLabel:
      // std::lround rounds halfway cases away from zero.
      vote.label = static_cast<int>(std::lround(vote.token_label_mean));
      break;
    case Aggregation::kMajority:
      vote.label = static_cast<int>(
          std::max_element(votes.begin(), votes.end()) - votes.begin());
      break;
    case Aggregation::kMeanProb:
      vote.label = ArgMax<double>(prob_sum);
      break;
  }
  vote.label = std::clamp(vote.label, 0, static_cast<int>(num_labels) - 1);
  return vote;
}

template <typename T>
std::vector<TokenVote> AggregateTokens(const TokenHeadOutput<T>& out,
                                       Aggregation mode) {
  std::vector<TokenVote> votes;
  votes.reserve(out.logits.size());
  for (size_t b = 0; b < out.logits.size(); ++b) {
    if (out.masks[b].size() != static_cast<size_t>(out.logits[b].rows())) {
      throw Error(ErrorCode::kLengthMismatch, "mask does not match logits");
    }
    votes.push_back(AggregateRows(out.logits[b], out.masks[b], mode));
  }
  return votes;
}

template <typename T>
TextPrediction PredictText(const ModelParams<T>& params, HeadKind head,
                           const ChunkSet& cs, Aggregation mode) {
  ValidateChunkSet(cs);
  if (cs.max_len > params.config.max_len) {
    throw Error(ErrorCode::kLengthExceeded,
                "chunk length " + std::to_string(cs.max_len) +
                    " exceeds model max_len " +
                    std::to_string(params.config.max_len));
  }
  TextPrediction prediction;
  prediction.example_id = cs.example_id;

  if (head == HeadKind::kSequence) {
    const Chunk& first = cs.chunks.front();
    const Matrix<T> logits = RealPrefixLogits(params, first);
    prediction.label = ArgMax<T>(logits.topRows(1));
    prediction.num_tokens_used = first.num_real();
    prediction.num_chunks = 1;
    return prediction;
  }

  Matrix<T> pooled(cs.original_length, params.config.num_labels);
  Eigen::Index row = 0;
  for (size_t k = 0; k < cs.chunks.size(); ++k) {
    const Matrix<T> logits = RealPrefixLogits(params, cs.chunks[k]);
    const Eigen::Index skip = k == 0 ? 0 : cs.stride;
    const Eigen::Index fresh = logits.rows() - skip;
    pooled.middleRows(row, fresh) = logits.bottomRows(fresh);
    row += fresh;
  }
  if (row != cs.original_length) {
    throw Error(ErrorCode::kInconsistentChunkSet,
                "pooled " + std::to_string(row) + " positions, expected " +
                    std::to_string(cs.original_length));
  }
  const std::vector<uint8_t> all(static_cast<size_t>(row), 1);
  const TokenVote vote = AggregateRows(pooled, all, mode);
  prediction.label = vote.label;
  prediction.token_label_mean = vote.token_label_mean;
  prediction.num_tokens_used = static_cast<int>(row);
  prediction.num_chunks = static_cast<int>(cs.chunks.size());
  return prediction;
}

ChunkSet ChunkForHead(std::span<const int> ids, HeadKind head, int max_len,
                      int stride, int64_t example_id) {
  if (head == HeadKind::kSequence) {
    const size_t keep = std::min(ids.size(), static_cast<size_t>(std::max(max_len, 0)));
    return MakeChunks(ids.first(keep), max_len, 0, example_id);
  }
  return MakeChunks(ids, max_len, stride, example_id);
}

#define TOKCLS_INSTANTIATE_HEADS(T)                                           \
  template TokenHeadOutput<T> TokenLogits<T>(                                 \
      const ModelParams<T>&, const std::vector<Matrix<T>>&,                   \
      const std::vector<std::vector<uint8_t>>&);                              \
  template SequenceHeadOutput<T> SequenceLogits<T>(                           \
      const ModelParams<T>&, const std::vector<Matrix<T>>&);                  \
  template int ArgMax<T>(const Eigen::Ref<const Matrix<T>>&);                 \
  template TokenVote AggregateRows<T>(const Matrix<T>&,                       \
                                      std::span<const uint8_t>, Aggregation); \
  template std::vector<TokenVote> AggregateTokens<T>(                         \
      const TokenHeadOutput<T>&, Aggregation);                                \
  template TextPrediction PredictText<T>(const ModelParams<T>&, HeadKind,     \
                                         const ChunkSet&, Aggregation);

TOKCLS_INSTANTIATE_HEADS(float)
TOKCLS_INSTANTIATE_HEADS(double)

}  // namespace tokcls
