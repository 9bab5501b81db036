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
#include <cstring>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "support/expect.h"
#include "support/oracles.h"
#include "support/synthetic.h"

namespace tokcls {
namespace {

using testing::ExpectErrorCode;

ModelConfig GradConfig() {
  ModelConfig config;
  config.vocab_size = 12;
  config.max_len = 8;
  config.hidden = 8;
  config.layers = 1;
  config.heads = 2;
  config.ffn = 12;
  config.num_labels = 3;
  config.seed = 21;
  return config;
}

ModelParams<double> Perturbed(const ModelConfig& config, uint64_t seed, double scale) {
  ModelParams<double> params = InitParams<double>(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  params.ForEachTensor([&](const std::string&, Matrix<double>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += normal(rng);
  });
  return params;
}

template <typename T>
bool BitwiseEqual(const ModelParams<T>& a, const ModelParams<T>& b) {
  std::vector<const Matrix<T>*> other;
  b.ForEachTensor([&](const std::string&, const Matrix<T>& m) { other.push_back(&m); });
  bool same = true;
  size_t i = 0;
  a.ForEachTensor([&](const std::string&, const Matrix<T>& m) {
    const Matrix<T>& o = *other[i++];
    same = same && m.rows() == o.rows() && m.cols() == o.cols() &&
           std::memcmp(m.data(), o.data(), sizeof(T) * m.size()) == 0;
  });
  return same;
}

TEST(LossToken, UniformAndPeaked) {
  const Matrix<double> uniform = Matrix<double>::Zero(4, 3);
  EXPECT_NEAR(LossToken<double>(uniform, std::vector<uint8_t>(4, 1), 1), std::log(3.0), 1e-12);
  Matrix<double> peaked = Matrix<double>::Zero(4, 3);
  peaked.col(2).setConstant(40.0);
  EXPECT_LT(LossToken<double>(peaked, std::vector<uint8_t>(4, 1), 2), 1e-15);
  EXPECT_NEAR(LossToken<double>(peaked, std::vector<uint8_t>(4, 1), 0), 40.0, 1e-9);
}

TEST(LossToken, PaddingEquivalenceAndZeroPadGradient) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 2.0);
  Matrix<double> logits(7, 3);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = normal(rng);
  const std::vector<uint8_t> mask = {1, 1, 1, 1, 0, 0, 0};
  Matrix<double> grad;
  const double padded = LossToken<double>(logits, mask, 1, &grad);
  const Matrix<double> real = logits.topRows(4);
  Matrix<double> real_grad;
  const double unpadded = LossToken<double>(real, std::vector<uint8_t>(4, 1), 1, &real_grad);
  EXPECT_NEAR(padded, unpadded, 1e-14);
  ASSERT_EQ(grad.rows(), 7);
  EXPECT_TRUE((grad.bottomRows(3).array() == 0.0).all());
  EXPECT_LT((grad.topRows(4) - real_grad).cwiseAbs().maxCoeff(), 1e-15);
  // Each real row's gradient is (softmax - onehot) / num_real.
  for (Eigen::Index r = 0; r < 4; ++r) EXPECT_NEAR(grad.row(r).sum(), 0.0, 1e-15);
}

TEST(LossToken, Errors) {
  const Matrix<double> logits = Matrix<double>::Zero(2, 3);
  ExpectErrorCode(ErrorCode::kNoRealTokens,
                  [&] { LossToken<double>(logits, std::vector<uint8_t>{0, 0}, 0); });
  ExpectErrorCode(ErrorCode::kBadLabel,
                  [&] { LossToken<double>(logits, std::vector<uint8_t>{1, 1}, 3); });
}

TEST(LossSequence, MatchesTokenLossAtPositionZero) {
  EXPECT_NEAR(LossSequence<double>(Matrix<double>::Zero(1, 3), 0), std::log(3.0), 1e-12);
  Matrix<double> peaked = Matrix<double>::Zero(5, 3);
  peaked(0, 1) = 40.0;
  EXPECT_LT(LossSequence<double>(peaked, 1), 1e-15);
  ExpectErrorCode(ErrorCode::kBadLabel, [&] { LossSequence<double>(peaked, -1); });

  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix<double> logits(6, 3);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = normal(rng);
    const int label = trial % 3;
    Matrix<double> seq_grad, tok_grad;
    const double seq = LossSequence<double>(logits, label, &seq_grad);
    const double tok =
        LossToken<double>(logits, std::vector<uint8_t>{1, 0, 0, 0, 0, 0}, label, &tok_grad);
    EXPECT_NEAR(seq, tok, 1e-14);
    EXPECT_LT((seq_grad - tok_grad).cwiseAbs().maxCoeff(), 1e-15);
  }
}

std::vector<TrainingSample> GradSamples() {
  return {{0, {2, 5, 6, 3, 7, 3}, 0},
          {1, {2, 8, 3, 9, 10, 4, 11, 3}, 2},
          {2, {2, 4, 3, 5, 3}, 1}};
}

TEST(Gradient, TokenHeadMatchesFiniteDifferences) {
  const ModelParams<double> params = Perturbed(GradConfig(), 31, 0.5);
  for (const auto& [name, err] :
       testing::GradientRelativeErrors(params, HeadKind::kToken, GradSamples())) {
    EXPECT_LT(err, 1e-4) << name;
  }
}

TEST(Gradient, SequenceHeadMatchesFiniteDifferences) {
  const ModelParams<double> params = Perturbed(GradConfig(), 32, 0.5);
  const auto errors = testing::GradientRelativeErrors(params, HeadKind::kSequence, GradSamples());
  EXPECT_EQ(errors.size(), 4u + 12u);
  for (const auto& [name, err] : errors) EXPECT_LT(err, 1e-4) << name;
}

TEST(Gradient, BatchIsMeanOfSamples) {
  const ModelParams<double> params = Perturbed(GradConfig(), 33, 0.3);
  const auto samples = GradSamples();
  std::vector<const TrainingSample*> batch;
  double sum = 0.0;
  for (const auto& s : samples) {
    batch.push_back(&s);
    sum += SampleLoss<double>(params, HeadKind::kToken, s);
  }
  ModelParams<double> grads = params.ZerosLike();
  EXPECT_NEAR(BatchLossAndGradient<double>(params, HeadKind::kToken, batch, &grads),
              sum / 3.0, 1e-12);
  ExpectErrorCode(ErrorCode::kEmptyInput, [&] {
    BatchLossAndGradient<double>(params, HeadKind::kToken,
                                 std::span<const TrainingSample* const>(), &grads);
  });
}

TEST(Adam, SmallStepDecreasesLoss) {
  for (const HeadKind head : {HeadKind::kToken, HeadKind::kSequence}) {
    ModelParams<double> params = Perturbed(GradConfig(), 34, 0.3);
    const auto samples = GradSamples();
    std::vector<const TrainingSample*> batch;
    for (const auto& s : samples) batch.push_back(&s);
    ModelParams<double> grads = params.ZerosLike();
    const double before = BatchLossAndGradient<double>(params, head, batch, &grads);
    Adam<double> adam(params, {1e-4, 0.9, 0.999, 1e-8});
    adam.Step(params, grads);
    EXPECT_EQ(adam.steps(), 1);
    const double after = BatchLossAndGradient<double>(params, head, batch, nullptr);
    EXPECT_LT(after, before) << HeadKindName(head);
  }
}

TEST(Adam, ZeroLearningRateIsIdentity) {
  ModelParams<double> params = Perturbed(GradConfig(), 35, 0.3);
  const ModelParams<double> original = params;
  const auto samples = GradSamples();
  std::vector<const TrainingSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  ModelParams<double> grads = params.ZerosLike();
  Adam<double> adam(params, {0.0, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 5; ++i) {
    BatchLossAndGradient<double>(params, HeadKind::kToken, batch, &grads);
    adam.Step(params, grads);
  }
  EXPECT_TRUE(BitwiseEqual(params, original));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps) per entry.
  ModelParams<double> params = InitParams<double>(GradConfig());
  ModelParams<double> grads = params.ZerosLike();
  grads.head_bias << 2.0, -0.5, 0.0;
  const double before = params.head_bias(0, 0);
  Adam<double> adam(params, {0.01, 0.9, 0.999, 1e-8});
  adam.Step(params, grads);
  EXPECT_NEAR(params.head_bias(0, 0) - before, -0.01, 1e-8);
  EXPECT_NEAR(params.head_bias(0, 1), 0.01, 1e-8);
  EXPECT_EQ(params.head_bias(0, 2), 0.0);
}

TEST(TrainConfig, Validate) {
  const ModelConfig model = ModelConfig::Toy(50, 16);
  TrainConfig config;
  config.stride = 4;
  EXPECT_NO_THROW(config.Validate(model));
  TrainConfig bad = config;
  bad.batch_size = 0;
  ExpectErrorCode(ErrorCode::kBadConfig, [&] { bad.Validate(model); });
  bad = config;
  bad.stride = 16;
  ExpectErrorCode(ErrorCode::kBadConfig, [&] { bad.Validate(model); });
  bad.head = HeadKind::kSequence;
  EXPECT_NO_THROW(bad.Validate(model));
  bad = config;
  bad.max_epochs = 0;
  ExpectErrorCode(ErrorCode::kBadConfig, [&] { bad.Validate(model); });
  bad = config;
  bad.lr = -1e-3;
  ExpectErrorCode(ErrorCode::kBadConfig, [&] { bad.Validate(model); });
}

TEST(BuildSamples, ChunksPerHead) {
  const Dataset ds = testing::LongTextDataset(6, 1, 16);
  const Vocab vocab = BuildVocab(ds, 1000);
  const auto token = BuildSamples(ds, vocab, HeadKind::kToken, 16, 4);
  const auto seq = BuildSamples(ds, vocab, HeadKind::kSequence, 16, 4);
  ASSERT_EQ(seq.size(), 6u);
  size_t expected = 0;
  for (const auto& ex : ds.examples) {
    const int length = static_cast<int>(Encode(ex.premise, ex.hypothesis, vocab).size());
    expected += ChunkCount(length, 16, 4);
  }
  EXPECT_EQ(token.size(), expected);
  for (const auto& s : seq) EXPECT_EQ(s.ids.size(), 16u);
  for (const auto& s : token) {
    EXPECT_GE(s.ids.size(), 1u);
    EXPECT_LE(s.ids.size(), 16u);
    EXPECT_EQ(std::count(s.ids.begin(), s.ids.end(), kPadId), 0);
  }
}

struct SmallRun {
  Dataset train = testing::SeparableDataset(24, 7);
  Dataset test = testing::SeparableDataset(12, 8);
  Vocab vocab = BuildVocab(train, 1000);
  ModelConfig model = ModelConfig::Toy(0, 16);
  TrainConfig config;

  SmallRun() {
    config.lr = 3e-3;
    config.batch_size = 4;
    config.stride = 4;
    config.max_epochs = 4;
    config.seed = 9;
  }
};

TEST(Fit, Deterministic) {
  for (const HeadKind head : {HeadKind::kToken, HeadKind::kSequence}) {
    SmallRun run;
    run.config.head = head;
    const FitResult a = Fit(run.config, run.model, run.vocab, run.train, run.test);
    const FitResult b = Fit(run.config, run.model, run.vocab, run.train, run.test);
    ASSERT_EQ(a.history.size(), 4u);
    for (size_t i = 0; i < a.history.size(); ++i) {
      EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
      EXPECT_EQ(a.history[i].test_qwk, b.history[i].test_qwk);
      EXPECT_EQ(a.history[i].test_accuracy, b.history[i].test_accuracy);
    }
    EXPECT_EQ(a.best_epoch, b.best_epoch);
    EXPECT_TRUE(BitwiseEqual(a.params, b.params));
  }
}

TEST(Fit, BestEpochHasHighestQwkEarliestOnTies) {
  SmallRun run;
  run.config.max_epochs = 6;
  std::vector<EpochRecord> seen;
  const FitResult fit = Fit(run.config, run.model, run.vocab, run.train, run.test,
                            [&](const EpochRecord& r) { seen.push_back(r); });
  ASSERT_EQ(seen.size(), 6u);
  double best = -2.0;
  int expected = 0;
  for (const auto& r : fit.history) {
    if (r.test_qwk > best) {
      best = r.test_qwk;
      expected = r.epoch;
    }
  }
  EXPECT_EQ(fit.best_epoch, expected);
  EXPECT_GE(fit.best_epoch, 1);
  EXPECT_LE(fit.best_epoch, 6);
}

TEST(Fit, ZeroLearningRateKeepsInitialParameters) {
  SmallRun run;
  run.config.lr = 0.0;
  const FitResult fit = Fit(run.config, run.model, run.vocab, run.train, run.test);
  ModelConfig model = run.model;
  model.vocab_size = run.vocab.size();
  EXPECT_TRUE(BitwiseEqual(fit.params, InitParams<float>(model)));
  for (const auto& r : fit.history) {
    EXPECT_EQ(r.test_qwk, fit.history[0].test_qwk);
    EXPECT_EQ(r.test_accuracy, fit.history[0].test_accuracy);
  }
  EXPECT_EQ(fit.best_epoch, 1);
}

TEST(Fit, Errors) {
  SmallRun run;
  ExpectErrorCode(ErrorCode::kEmptyDataset,
                  [&] { Fit(run.config, run.model, run.vocab, Dataset{}, run.test); });
  ModelConfig wrong = run.model;
  wrong.vocab_size = run.vocab.size() + 1;
  ExpectErrorCode(ErrorCode::kBadConfig,
                  [&] { Fit(run.config, wrong, run.vocab, run.train, run.test); });
  run.config.lr = 1e38;
  ExpectErrorCode(ErrorCode::kDivergence,
                  [&] { Fit(run.config, run.model, run.vocab, run.train, run.test); });
}

TEST(GridRowBefore, Ordering) {
  GridResult a, b;
  a.experiment_id = 1;
  b.experiment_id = 2;
  a.test_qwk = 0.5;
  b.test_qwk = 0.6;
  EXPECT_TRUE(GridRowBefore(b, a));
  b.test_qwk = 0.5;
  a.test_accuracy = 0.7;
  b.test_accuracy = 0.6;
  EXPECT_TRUE(GridRowBefore(a, b));
  b.test_accuracy = 0.7;
  a.lr = 2e-3;
  b.lr = 1e-3;
  EXPECT_TRUE(GridRowBefore(b, a));
  b.lr = 2e-3;
  a.batch_size = 8;
  b.batch_size = 4;
  EXPECT_TRUE(GridRowBefore(b, a));
  b.batch_size = 8;
  EXPECT_TRUE(GridRowBefore(a, b));
  a.failed = true;
  a.test_qwk = 1.0;
  EXPECT_TRUE(GridRowBefore(b, a));
}

TEST(GridSearch, SequenceGridIsSortedPermutation) {
  SmallRun run;
  GridSpec spec;
  spec.lrs = {1e-3, 5e-3};
  spec.batch_sizes = {4, 8};
  spec.strides = {2, 4, 6};
  spec.base = run.config;
  spec.base.head = HeadKind::kSequence;
  spec.base.max_epochs = 2;
  spec.model = run.model;
  spec.workers = 2;
  const GridOutcome out = GridSearch(spec, run.vocab, run.train, run.test);
  ASSERT_EQ(out.rows.size(), 4u);
  EXPECT_TRUE(std::is_sorted(out.rows.begin(), out.rows.end(), GridRowBefore));
  std::set<std::pair<double, int>> points;
  std::set<int> ids;
  for (const auto& row : out.rows) {
    EXPECT_FALSE(row.failed) << row.error;
    EXPECT_EQ(row.stride, 0);
    EXPECT_EQ(row.head, HeadKind::kSequence);
    EXPECT_LE(row.best_epoch, row.max_epochs);
    EXPECT_GE(row.test_accuracy, 0.0);
    EXPECT_LE(row.test_accuracy, 1.0);
    EXPECT_LE(row.test_qwk, 1.0);
    points.insert({row.lr, row.batch_size});
    ids.insert(row.experiment_id);
  }
  EXPECT_EQ(points.size(), 4u);
  EXPECT_EQ(ids, (std::set<int>{1, 2, 3, 4}));
  ASSERT_TRUE(out.best_row.has_value());
  EXPECT_EQ(out.best_row->experiment_id, out.rows.front().experiment_id);
  ASSERT_TRUE(out.best.has_value());
  EXPECT_EQ(out.best->best_epoch, out.rows.front().best_epoch);

  // lr-major, then batch size.
  for (const auto& row : out.rows) {
    const int expected = (row.lr == 1e-3 ? 0 : 2) + (row.batch_size == 4 ? 1 : 2);
    EXPECT_EQ(row.experiment_id, expected);
  }
}

TEST(GridSearch, DivergentCellIsIsolated) {
  SmallRun run;
  GridSpec spec;
  spec.lrs = {1e38, 3e-3};
  spec.batch_sizes = {4};
  spec.strides = {2, 4};
  spec.base = run.config;
  spec.base.max_epochs = 2;
  spec.model = run.model;
  const GridOutcome out = GridSearch(spec, run.vocab, run.train, run.test);
  ASSERT_EQ(out.rows.size(), 4u);
  int failed = 0;
  for (size_t i = 0; i < out.rows.size(); ++i) {
    const auto& row = out.rows[i];
    if (row.lr == 1e38) {
      EXPECT_TRUE(row.failed);
      EXPECT_NE(row.error.find("Divergence"), std::string::npos) << row.error;
      EXPECT_GE(i, 2u);
      ++failed;
    } else {
      EXPECT_FALSE(row.failed) << row.error;
      EXPECT_TRUE(row.stride == 2 || row.stride == 4);
    }
  }
  EXPECT_EQ(failed, 2);
  ASSERT_TRUE(out.best_row.has_value());
  EXPECT_EQ(out.best_row->lr, 3e-3);
}

}  // namespace
}  // namespace tokcls
