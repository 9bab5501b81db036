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

#include "tokcls/config.h"

#include <fstream>

#include <gtest/gtest.h>

#include "support/expect.h"
#include "support/synthetic.h"

namespace tokcls {
namespace {

using testing::ExpectErrorCode;

std::string FailureMessage(const KeyValues& values) {
  try {
    RunConfig::FromKeyValues(values).Validate();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadConfig);
    return e.what();
  }
  ADD_FAILURE() << "config was accepted";
  return {};
}

TEST(ParseKeyValues, Basics) {
  const KeyValues kv = ParseKeyValues(
      "# comment\n\n  lr = 0.001 \nbatch-size=8\r\ntrain = data/a b.tsv\nempty =\n");
  EXPECT_EQ(kv.at("lr"), "0.001");
  EXPECT_EQ(kv.at("batch_size"), "8");
  EXPECT_EQ(kv.at("train"), "data/a b.tsv");
  EXPECT_EQ(kv.at("empty"), "");
  EXPECT_EQ(kv.size(), 4u);
}

TEST(ParseKeyValues, MalformedLinesNameTheLocation) {
  try {
    ParseKeyValues("lr = 1\nnot a pair\n", "grid.cfg");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadConfig);
    EXPECT_NE(std::string(e.what()).find("grid.cfg:2"), std::string::npos) << e.what();
  }
  ExpectErrorCode(ErrorCode::kBadConfig, [] { ParseKeyValues("= 3\n"); });
}

TEST(RunConfig, FromKeyValues) {
  const RunConfig run = RunConfig::FromKeyValues({{"train", "a.tsv"},
                                                  {"test", "b.jsonl"},
                                                  {"head", "sequence"},
                                                  {"max_len", "64"},
                                                  {"stride", "8"},
                                                  {"lr", "2.5e-5"},
                                                  {"seed", "42"},
                                                  {"aggregation", "majority"},
                                                  {"format", "tsv"}});
  EXPECT_EQ(run.train_path, "a.tsv");
  EXPECT_EQ(run.train.head, HeadKind::kSequence);
  EXPECT_EQ(run.model.max_len, 64);
  EXPECT_EQ(run.train.stride, 8);
  EXPECT_EQ(run.train.lr, 2.5e-5);
  EXPECT_EQ(run.train.seed, 42u);
  EXPECT_EQ(run.model.seed, 42u);
  EXPECT_EQ(run.train.aggregation, Aggregation::kMajority);
  ASSERT_TRUE(run.format.has_value());
  EXPECT_EQ(run.FormatFor("x.jsonl"), DataFormat::kTsv);
  EXPECT_NO_THROW(run.Validate());
  EXPECT_EQ(RunConfig::FromKeyValues({}).FormatFor("x.jsonl"), DataFormat::kJsonl);
}

TEST(RunConfig, FieldLevelErrors) {
  EXPECT_NE(FailureMessage({{"batch_size", "0"}}).find("batch_size"), std::string::npos);
  EXPECT_NE(FailureMessage({{"batch_size", "eight"}}).find("batch_size"), std::string::npos);
  EXPECT_NE(FailureMessage({{"lr", "1e-3x"}}).find("lr"), std::string::npos);
  EXPECT_NE(FailureMessage({{"max_len", "32"}, {"stride", "32"}}).find("stride"),
            std::string::npos);
  EXPECT_NE(FailureMessage({{"hidden", "30"}, {"heads", "4"}}).find("hidden"),
            std::string::npos);
  EXPECT_NE(FailureMessage({{"learning_rate", "1"}}).find("learning_rate"), std::string::npos);
  EXPECT_NE(FailureMessage({{"head", "crf"}}).find("head"), std::string::npos);
  EXPECT_NE(FailureMessage({{"vocab_max_size", "3"}}).find("vocab_max_size"),
            std::string::npos);
  EXPECT_NE(FailureMessage({{"max_epochs", "0"}}).find("max_epochs"), std::string::npos);
}

TEST(GridConfig, Lists) {
  const GridConfig grid = GridConfig::FromKeyValues(
      {{"lr", "1e-3, 2e-3"}, {"batch_size", "4,8"}, {"stride", "2"}, {"max_len", "16"},
       {"grid_workers", "3"}});
  EXPECT_EQ(grid.lrs, (std::vector<double>{1e-3, 2e-3}));
  EXPECT_EQ(grid.batch_sizes, (std::vector<int>{4, 8}));
  EXPECT_EQ(grid.strides, (std::vector<int>{2}));
  EXPECT_EQ(grid.grid_workers, 3);
  EXPECT_NO_THROW(grid.Validate());

  const GridConfig defaults = GridConfig::FromKeyValues({});
  EXPECT_EQ(defaults.lrs.size(), 1u);
  EXPECT_EQ(defaults.batch_sizes.size(), 1u);

  ExpectErrorCode(ErrorCode::kBadConfig,
                  [] { GridConfig::FromKeyValues({{"lr", "1e-3,,2e-3"}}); });
  ExpectErrorCode(ErrorCode::kBadConfig, [] {
    GridConfig::FromKeyValues({{"batch_size", "4,0"}}).Validate();
  });
  ExpectErrorCode(ErrorCode::kBadConfig, [] {
    GridConfig::FromKeyValues({{"max_len", "16"}, {"stride", "4,16"}}).Validate();
  });
  // The sequence head ignores strides.
  EXPECT_NO_THROW(GridConfig::FromKeyValues(
                      {{"head", "sequence"}, {"max_len", "16"}, {"stride", "4,16"}})
                      .Validate());
}

TEST(LoadKeyValueFile, ReadsAndReportsMissing) {
  const auto dir = testing::MakeTempDir("config");
  std::ofstream(dir / "run.cfg") << "lr=0.5\n";
  EXPECT_EQ(LoadKeyValueFile(dir / "run.cfg").at("lr"), "0.5");
  ExpectErrorCode(ErrorCode::kIoFailure, [&] { LoadKeyValueFile(dir / "missing.cfg"); });
}

}  // namespace
}  // namespace tokcls
