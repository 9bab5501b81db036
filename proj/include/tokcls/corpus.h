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

// Ingestion of premise/hypothesis classification data and the per-split
// summary statistics (samples, tokens, long-text count, label balance).

#ifndef TOKCLS_CORPUS_H_
#define TOKCLS_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tokcls {

class Vocab;

inline constexpr int kDefaultNumLabels = 3;

// One premise/hypothesis pair; label codes follow XNLI (0 entailment,
// 1 neutral, 2 contradiction).
struct LabeledExample {
  int64_t id = 0;
  std::string premise;
  std::string hypothesis;
  int label = 0;

  bool operator==(const LabeledExample&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<LabeledExample> examples;

  size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  bool operator==(const Dataset&) const = default;
};

// An unlabeled text pair, as consumed by prediction.
struct TextPair {
  int64_t id = 0;
  std::string premise;
  std::string hypothesis;
};

struct DataStats {
  int64_t samples = 0;
  int64_t total_tokens = 0;
  int64_t num_over_threshold = 0;
  int threshold = 0;
  double average_label = 0.0;
  std::vector<double> label_percentages;
};

enum class DataFormat { kTsv, kJsonl };

// ".jsonl"/".json"/".ndjson" map to kJsonl, anything else to kTsv.
DataFormat FormatFromPath(const std::filesystem::path& path);
DataFormat ParseDataFormat(std::string_view name);

// TSV: header row naming at least premise, hypothesis and label columns (an
// optional id column is honored); JSONL: one object per line with the same
// field names. Records without an id get their 0-based record index.
Dataset LoadDataset(const std::filesystem::path& path, DataFormat format,
                    int num_labels = kDefaultNumLabels);
Dataset LoadDataset(const std::filesystem::path& path,
                    int num_labels = kDefaultNumLabels);

// Same formats as LoadDataset; the label column is optional and ignored.
std::vector<TextPair> LoadTextPairs(const std::filesystem::path& path,
                                    DataFormat format);

inline constexpr std::string_view kSeparatorMarker = "[SEP]";

// premise + " [SEP] " + hypothesis. Throws kEmptyText if either side is
// blank after trimming.
std::string CombineText(const LabeledExample& example);
std::string CombineText(std::string_view premise, std::string_view hypothesis);

// Token counts use the full encoded length, special tokens included.
DataStats ComputeStats(const Dataset& dataset, const Vocab& vocab,
                       int threshold, int num_labels = kDefaultNumLabels);

}  // namespace tokcls

#endif  // TOKCLS_CORPUS_H_
