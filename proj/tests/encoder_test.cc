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
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "support/expect.h"

namespace tokcls {
namespace {

using testing::ExpectErrorCode;

ModelConfig SmallConfig() {
  ModelConfig config;
  config.vocab_size = 40;
  config.max_len = 24;
  config.hidden = 16;
  config.layers = 2;
  config.heads = 4;
  config.ffn = 24;
  config.num_labels = 3;
  config.seed = 11;
  return config;
}

// Random weights well away from the tiny initializer scale, so attention is
// far from uniform.
template <typename T>
ModelParams<T> RandomParams(const ModelConfig& config, uint64_t seed, double scale = 0.5) {
  ModelParams<T> params = InitParams<T>(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  params.ForEachTensor([&](const std::string&, Matrix<T>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += static_cast<T>(normal(rng));
  });
  return params;
}

std::vector<int> RandomIds(int length, int vocab, std::mt19937_64& rng) {
  std::vector<int> ids(length);
  for (int& id : ids) id = std::uniform_int_distribution<int>(0, vocab - 1)(rng);
  return ids;
}

TEST(ModelConfig, Validate) {
  ModelConfig config = SmallConfig();
  EXPECT_NO_THROW(config.Validate());
  config.hidden = 6;
  config.heads = 4;
  ExpectErrorCode(ErrorCode::kBadConfig, [&] { InitParams<float>(config); });
  config = SmallConfig();
  config.num_labels = 1;
  ExpectErrorCode(ErrorCode::kBadConfig, [&] { config.Validate(); });
  config = SmallConfig();
  config.layers = 0;
  ExpectErrorCode(ErrorCode::kBadConfig, [&] { config.Validate(); });
}

TEST(InitParams, BitwiseDeterministic) {
  const ModelParams<float> a = InitParams<float>(SmallConfig());
  const ModelParams<float> b = InitParams<float>(SmallConfig());
  std::vector<const Matrix<float>*> tensors;
  b.ForEachTensor([&](const std::string&, const Matrix<float>& m) { tensors.push_back(&m); });
  size_t i = 0;
  a.ForEachTensor([&](const std::string& name, const Matrix<float>& m) {
    const Matrix<float>& other = *tensors[i++];
    ASSERT_EQ(m.rows(), other.rows()) << name;
    ASSERT_EQ(m.cols(), other.cols()) << name;
    EXPECT_EQ(std::memcmp(m.data(), other.data(), sizeof(float) * m.size()), 0) << name;
  });
  ModelConfig reseeded = SmallConfig();
  reseeded.seed = 12;
  EXPECT_NE(InitParams<float>(reseeded).token_embeddings, a.token_embeddings);
}

TEST(InitParams, ShapesAndAffineDefaults) {
  const ModelConfig config = SmallConfig();
  const ModelParams<float> p = InitParams<float>(config);
  EXPECT_EQ(p.token_embeddings.rows(), 40);
  EXPECT_EQ(p.token_embeddings.cols(), 16);
  EXPECT_EQ(p.position_embeddings.rows(), 24);
  ASSERT_EQ(p.layers.size(), 2u);
  EXPECT_EQ(p.layers[0].ffn_in.rows(), 16);
  EXPECT_EQ(p.layers[0].ffn_in.cols(), 24);
  EXPECT_EQ(p.layers[0].ffn_out.rows(), 24);
  EXPECT_EQ(p.head_weight.rows(), 16);
  EXPECT_EQ(p.head_weight.cols(), 3);
  EXPECT_TRUE((p.layers[1].ln1_scale.array() == 1.0f).all());
  EXPECT_TRUE((p.layers[1].ln2_shift.array() == 0.0f).all());
  EXPECT_TRUE((p.layers[0].ffn_in_bias.array() == 0.0f).all());
  EXPECT_TRUE((p.head_bias.array() == 0.0f).all());
  EXPECT_TRUE(p.AllFinite());
}

TEST(InitParams, TruncatedNormalStatistics) {
  ModelConfig config = SmallConfig();
  config.vocab_size = 8000;  // 128000 draws
  const ModelParams<double> p = InitParams<double>(config);
  const auto& e = p.token_embeddings;
  ASSERT_GE(e.size(), 100000);
  const double mean = e.mean();
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_LE(e.cwiseAbs().maxCoeff(), 0.04);
  // A normal truncated at +-2 sd keeps about 88% of its standard deviation.
  const double sd = std::sqrt((e.array() - mean).square().mean());
  EXPECT_NEAR(sd, 0.02 * 0.8796, 0.0005);
}

TEST(Forward, AttentionRowsAreDistributions) {
  const ModelConfig config = SmallConfig();
  const auto params = RandomParams<double>(config, 3);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int length = std::uniform_int_distribution<int>(1, config.max_len)(rng);
    const int real = std::uniform_int_distribution<int>(1, length)(rng);
    const std::vector<int> ids = RandomIds(length, config.vocab_size, rng);
    std::vector<uint8_t> mask(length, 0);
    std::fill_n(mask.begin(), real, uint8_t{1});
    EncoderTrace<double> trace;
    EncodeSequence<double>(params, ids, mask, &trace);
    for (const auto& layer : trace.layers) {
      for (const auto& probs : layer.probs) {
        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
          EXPECT_NEAR(probs.row(r).leftCols(real).sum(), 1.0, 1e-6);
          for (Eigen::Index c = real; c < probs.cols(); ++c) EXPECT_EQ(probs(r, c), 0.0);
        }
      }
    }
  }
}

template <typename T>
void CheckPaddingInvariance(const ModelParams<T>& params, double tolerance) {
  const ModelConfig& config = params.config;
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int real = std::uniform_int_distribution<int>(1, config.max_len - 8)(rng);
    std::vector<int> ids = RandomIds(real, config.vocab_size, rng);
    std::vector<uint8_t> mask(real, 1);
    const Matrix<T> base = EncodeSequence<T>(params, ids, mask);
    ids.resize(real + 8, 0);
    mask.resize(real + 8, 0);
    const Matrix<T> padded = EncodeSequence<T>(params, ids, mask);
    ASSERT_EQ(padded.rows(), real + 8);
    EXPECT_LE((padded.topRows(real) - base).cwiseAbs().maxCoeff(), tolerance);
  }
}

TEST(Forward, TrailingPadsDoNotChangeRealPositions) {
  CheckPaddingInvariance<float>(InitParams<float>(SmallConfig()), 1e-5);
  CheckPaddingInvariance<double>(InitParams<double>(SmallConfig()), 1e-10);
  CheckPaddingInvariance<double>(RandomParams<double>(SmallConfig(), 8), 1e-10);
}

TEST(Forward, PureAndBatchConsistent) {
  const ModelConfig config = SmallConfig();
  const auto params = RandomParams<float>(config, 4);
  const std::vector<int> ids = {2, 7, 9, 3, 11, 3};
  const std::vector<uint8_t> mask(ids.size(), 1);
  const auto out = Forward<float>(params, {ids, ids}, {mask, mask});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].rows(), 6);
  EXPECT_EQ(out[0].cols(), 16);
  EXPECT_EQ(out[0], out[1]);
  EXPECT_EQ(EncodeSequence<float>(params, ids, mask), out[0]);
}

TEST(Forward, Errors) {
  const ModelConfig config = SmallConfig();
  const auto params = InitParams<float>(config);
  const std::vector<int> too_long(config.max_len + 1, 4);
  ExpectErrorCode(ErrorCode::kLengthExceeded, [&] {
    EncodeSequence<float>(params, too_long, std::vector<uint8_t>(too_long.size(), 1));
  });
  const std::vector<int> bad_id = {2, config.vocab_size, 3};
  ExpectErrorCode(ErrorCode::kIdOutOfRange, [&] {
    EncodeSequence<float>(params, bad_id, std::vector<uint8_t>(3, 1));
  });
  ExpectErrorCode(ErrorCode::kIdOutOfRange, [&] {
    EncodeSequence<float>(params, std::vector<int>{-1}, std::vector<uint8_t>(1, 1));
  });
}

TEST(ModelParams, CastAndZeros) {
  const auto params = InitParams<float>(SmallConfig());
  const ModelParams<double> wide = params.Cast<double>();
  EXPECT_EQ(wide.Cast<float>().token_embeddings, params.token_embeddings);
  const auto zeros = params.ZerosLike();
  EXPECT_EQ(zeros.NumParameters(), params.NumParameters());
  EXPECT_EQ(zeros.layers[1].query.cwiseAbs().maxCoeff(), 0.0f);
}

}  // namespace
}  // namespace tokcls
