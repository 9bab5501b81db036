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

#include "tokcls/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tokcls/error.h"
#include "tokcls/tokenizer.h"

namespace tokcls {
namespace {

struct RawRecord {
  size_t line = 0;
  std::optional<int64_t> id;
  std::optional<std::string> premise;
  std::optional<std::string> hypothesis;
  std::optional<std::string> label;
};

constexpr std::string_view kWhitespace = " \t\r\n\f\v";

std::string_view Trim(std::string_view s) {
  const size_t begin = s.find_first_not_of(kWhitespace);
  if (begin == std::string_view::npos) return {};
  const size_t end = s.find_last_not_of(kWhitespace);
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string Where(const std::filesystem::path& path, size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::optional<int64_t> ParseInt(std::string_view text) {
  text = Trim(text);
  int64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoFailure, "read failed: " + path.string());
  return buffer.str();
}

std::vector<std::string_view> Lines(std::string_view content) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start < content.size()) {
    size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<RawRecord> ReadTsv(const std::filesystem::path& path,
                               std::string_view content) {
  std::vector<RawRecord> records;
  const std::vector<std::string_view> lines = Lines(content);
  if (lines.empty()) return records;

  std::string_view header = lines[0];
  // Tolerate a UTF-8 byte order mark.
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  std::unordered_map<std::string, size_t> columns;
  const auto names = SplitTabs(header);
  for (size_t i = 0; i < names.size(); ++i) {
    columns.emplace(std::string(Trim(names[i])), i);
  }
  auto column = [&](const std::string& name) -> std::optional<size_t> {
    const auto it = columns.find(name);
    if (it == columns.end()) return std::nullopt;
    return it->second;
  };
  const auto premise_col = column("premise");
  const auto hypothesis_col = column("hypothesis");
  const auto label_col = column("label");
  const auto id_col = column("id");
  if (!premise_col || !hypothesis_col) {
    throw Error(ErrorCode::kMissingField,
                Where(path, 1) + ": header must name premise and hypothesis");
  }

  for (size_t i = 1; i < lines.size(); ++i) {
    if (Trim(lines[i]).empty()) continue;
    const auto fields = SplitTabs(lines[i]);
    RawRecord record;
    record.line = i + 1;
    auto field = [&](std::optional<size_t> col) -> std::optional<std::string> {
      if (!col || *col >= fields.size()) return std::nullopt;
      return std::string(fields[*col]);
    };
    record.premise = field(premise_col);
    record.hypothesis = field(hypothesis_col);
    record.label = field(label_col);
    if (auto id = field(id_col)) {
      record.id = ParseInt(*id);
      if (!record.id) {
        throw Error(ErrorCode::kMissingField,
                    Where(path, record.line) + ": id is not an integer");
      }
    }
    if (!record.premise) {
      throw Error(ErrorCode::kMissingField,
                  Where(path, record.line) + ": missing premise");
    }
    if (!record.hypothesis) {
      throw Error(ErrorCode::kMissingField,
                  Where(path, record.line) + ": missing hypothesis");
    }
    if (label_col && !record.label) {
      throw Error(ErrorCode::kMissingField,
                  Where(path, record.line) + ": missing label");
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<RawRecord> ReadJsonl(const std::filesystem::path& path,
                                 std::string_view content) {
  std::vector<RawRecord> records;
  const std::vector<std::string_view> lines = Lines(content);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (Trim(lines[i]).empty()) continue;
    nlohmann::json object;
    try {
      object = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kIoFailure,
                  Where(path, i + 1) + ": malformed record: " + e.what());
    }
    if (!object.is_object()) {
      throw Error(ErrorCode::kIoFailure,
                  Where(path, i + 1) + ": record is not an object");
    }
    RawRecord record;
    record.line = i + 1;
    auto text = [&](const char* key) -> std::optional<std::string> {
      const auto it = object.find(key);
      if (it == object.end() || !it->is_string()) return std::nullopt;
      return it->get<std::string>();
    };
    record.premise = text("premise");
    record.hypothesis = text("hypothesis");
    if (!record.premise) {
      throw Error(ErrorCode::kMissingField,
                  Where(path, record.line) + ": missing premise");
    }
    if (!record.hypothesis) {
      throw Error(ErrorCode::kMissingField,
                  Where(path, record.line) + ": missing hypothesis");
    }
    if (const auto it = object.find("label"); it != object.end()) {
      record.label = it->is_string() ? it->get<std::string>() : it->dump();
    }
    if (const auto it = object.find("id"); it != object.end()) {
      if (!it->is_number_integer()) {
        throw Error(ErrorCode::kMissingField,
                    Where(path, record.line) + ": id is not an integer");
      }
      record.id = it->get<int64_t>();
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<RawRecord> ReadRecords(const std::filesystem::path& path,
                                   DataFormat format) {
  const std::string content = ReadFile(path);
  return format == DataFormat::kTsv ? ReadTsv(path, content)
                                    : ReadJsonl(path, content);
}

void CheckText(const std::filesystem::path& path, const RawRecord& record) {
  if (Trim(*record.premise).empty()) {
    throw Error(ErrorCode::kEmptyText,
                Where(path, record.line) + ": premise is blank");
  }
  if (Trim(*record.hypothesis).empty()) {
    throw Error(ErrorCode::kEmptyText,
                Where(path, record.line) + ": hypothesis is blank");
  }
}

}  // namespace

DataFormat FormatFromPath(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") {
    return DataFormat::kJsonl;
  }
  return DataFormat::kTsv;
}

DataFormat ParseDataFormat(std::string_view name) {
  if (name == "tsv") return DataFormat::kTsv;
  if (name == "jsonl") return DataFormat::kJsonl;
  throw Error(ErrorCode::kBadConfig,
              "unknown data format '" + std::string(name) + "'");
}

Dataset LoadDataset(const std::filesystem::path& path, DataFormat format,
                    int num_labels) {
  Dataset dataset;
  dataset.name = path.stem().string();
  std::unordered_set<int64_t> seen;
  const std::vector<RawRecord> records = ReadRecords(path, format);
  dataset.examples.reserve(records.size());
  for (size_t index = 0; index < records.size(); ++index) {
    const RawRecord& record = records[index];
    if (!record.label) {
      throw Error(ErrorCode::kMissingField,
                  Where(path, record.line) + ": missing label");
    }
    const auto label = ParseInt(*record.label);
    if (!label || *label < 0 || *label >= num_labels) {
      throw Error(ErrorCode::kBadLabel,
                  Where(path, record.line) + ": label '" + *record.label +
                      "' is not an integer in [0, " +
                      std::to_string(num_labels) + ")");
    }
    CheckText(path, record);
    LabeledExample example;
    example.id = record.id.value_or(static_cast<int64_t>(index));
    if (!seen.insert(example.id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  Where(path, record.line) + ": duplicate id " +
                      std::to_string(example.id));
    }
    example.premise = *record.premise;
    example.hypothesis = *record.hypothesis;
    example.label = static_cast<int>(*label);
    dataset.examples.push_back(std::move(example));
  }
  return dataset;
}

Dataset LoadDataset(const std::filesystem::path& path, int num_labels) {
  return LoadDataset(path, FormatFromPath(path), num_labels);
}

std::vector<TextPair> LoadTextPairs(const std::filesystem::path& path,
                                    DataFormat format) {
  std::vector<TextPair> pairs;
  const std::vector<RawRecord> records = ReadRecords(path, format);
  std::unordered_set<int64_t> seen;
  for (size_t index = 0; index < records.size(); ++index) {
    const RawRecord& record = records[index];
    CheckText(path, record);
    TextPair pair{record.id.value_or(static_cast<int64_t>(index)),
                  *record.premise, *record.hypothesis};
    if (!seen.insert(pair.id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  Where(path, record.line) + ": duplicate id " +
                      std::to_string(pair.id));
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::string CombineText(std::string_view premise, std::string_view hypothesis) {
  if (Trim(premise).empty() || Trim(hypothesis).empty()) {
    throw Error(ErrorCode::kEmptyText, "premise and hypothesis must be non-blank");
  }
  std::string text;
  text.reserve(premise.size() + hypothesis.size() + kSeparatorMarker.size() + 2);
  text.append(premise).append(" ").append(kSeparatorMarker).append(" ");
  text.append(hypothesis);
  return text;
}

std::string CombineText(const LabeledExample& example) {
  return CombineText(example.premise, example.hypothesis);
}

DataStats ComputeStats(const Dataset& dataset, const Vocab& vocab,
                       int threshold, int num_labels) {
  if (dataset.empty()) {
    throw Error(ErrorCode::kEmptyDataset,
                "cannot summarize empty dataset '" + dataset.name + "'");
  }
  DataStats stats;
  stats.samples = static_cast<int64_t>(dataset.size());
  stats.threshold = threshold;
  std::vector<int64_t> counts(num_labels, 0);
  int64_t label_sum = 0;
  for (const LabeledExample& example : dataset.examples) {
    const auto length = static_cast<int64_t>(
        Encode(example.premise, example.hypothesis, vocab).size());
    stats.total_tokens += length;
    if (length > threshold) ++stats.num_over_threshold;
    if (example.label < 0 || example.label >= num_labels) {
      throw Error(ErrorCode::kBadLabel,
                  "example " + std::to_string(example.id) + " label out of range");
    }
    ++counts[example.label];
    label_sum += example.label;
  }
  stats.average_label =
      static_cast<double>(label_sum) / static_cast<double>(stats.samples);
  for (const int64_t count : counts) {
    stats.label_percentages.push_back(100.0 * static_cast<double>(count) /
                                      static_cast<double>(stats.samples));
  }
  return stats;
}

}  // namespace tokcls
