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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "tokcls/error.h"

namespace tokcls {
namespace {

constexpr std::string_view kWhitespace = " \t\r\n";

std::string_view Trim(std::string_view s) {
  const size_t begin = s.find_first_not_of(kWhitespace);
  if (begin == std::string_view::npos) return {};
  return s.substr(begin, s.find_last_not_of(kWhitespace) - begin + 1);
}

std::string NormalizeKey(std::string_view key) {
  std::string out(Trim(key));
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

[[noreturn]] void BadField(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kBadConfig, "field '" + field + "': " + why);
}

template <typename N>
N ParseNumber(const std::string& field, std::string_view text) {
  text = Trim(text);
  N value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    BadField(field, "cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

template <typename N>
std::vector<N> ParseList(const std::string& field, std::string_view text) {
  std::vector<N> out;
  size_t start = 0;
  while (start <= text.size()) {
    size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    out.push_back(ParseNumber<N>(field, text.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

const std::set<std::string>& RunKeys() {
  static const std::set<std::string> keys = {
      "train", "test", "vocab", "out", "format", "vocab_max_size",
      "vocab_min_freq", "max_len", "hidden", "layers", "heads", "ffn",
      "num_labels", "head", "lr", "batch_size", "stride", "max_epochs",
      "beta1", "beta2", "epsilon", "seed", "aggregation", "workers"};
  return keys;
}

// Builds a RunConfig from `values`, skipping keys listed in `skip`.
RunConfig BuildRun(const KeyValues& values, const std::set<std::string>& skip) {
  RunConfig run;
  for (const auto& [key, value] : values) {
    if (skip.contains(key)) continue;
    if (!RunKeys().contains(key) && key != "grid_workers") {
      BadField(key, "unknown configuration key");
    }
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (skip.contains(key)) return std::nullopt;
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
  auto set_int = [&](const std::string& key, int& target) {
    if (auto v = get(key)) target = ParseNumber<int>(key, *v);
  };
  auto set_double = [&](const std::string& key, double& target) {
    if (auto v = get(key)) target = ParseNumber<double>(key, *v);
  };
  if (auto v = get("train")) run.train_path = *v;
  if (auto v = get("test")) run.test_path = *v;
  if (auto v = get("vocab")) run.vocab_path = *v;
  if (auto v = get("out")) run.out_dir = *v;
  if (auto v = get("format"); v && *v != "auto") run.format = ParseDataFormat(*v);
  set_int("vocab_max_size", run.vocab_max_size);
  set_int("vocab_min_freq", run.vocab_min_freq);
  set_int("max_len", run.model.max_len);
  set_int("hidden", run.model.hidden);
  set_int("layers", run.model.layers);
  set_int("heads", run.model.heads);
  set_int("ffn", run.model.ffn);
  set_int("num_labels", run.model.num_labels);
  if (auto v = get("head")) run.train.head = ParseHeadKind(Trim(*v));
  if (auto v = get("aggregation")) run.train.aggregation = ParseAggregation(Trim(*v));
  set_double("lr", run.train.lr);
  set_int("batch_size", run.train.batch_size);
  set_int("stride", run.train.stride);
  set_int("max_epochs", run.train.max_epochs);
  set_double("beta1", run.train.beta1);
  set_double("beta2", run.train.beta2);
  set_double("epsilon", run.train.epsilon);
  set_int("workers", run.train.workers);
  if (auto v = get("seed")) {
    run.train.seed = ParseNumber<uint64_t>("seed", *v);
    run.model.seed = run.train.seed;
  }
  return run;
}

}  // namespace

KeyValues ParseKeyValues(std::string_view text, const std::string& source) {
  KeyValues values;
  size_t line_no = 0;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = Trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kBadConfig,
                  source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = NormalizeKey(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kBadConfig,
                  source + ":" + std::to_string(line_no) + ": empty key");
    }
    values[key] = std::string(Trim(line.substr(eq + 1)));
  }
  return values;
}

KeyValues LoadKeyValueFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseKeyValues(buffer.str(), path.string());
}

RunConfig RunConfig::FromKeyValues(const KeyValues& values) {
  return BuildRun(values, {});
}

void RunConfig::Validate() const {
  if (vocab_max_size < 4) BadField("vocab_max_size", "must be >= 4");
  if (vocab_min_freq < 1) BadField("vocab_min_freq", "must be >= 1");
  ModelConfig probe = model;
  if (probe.vocab_size == 0) probe.vocab_size = std::max(vocab_max_size, 4);
  probe.Validate();
  train.Validate(probe);
}

DataFormat RunConfig::FormatFor(const std::filesystem::path& path) const {
  return format ? *format : FormatFromPath(path);
}

GridConfig GridConfig::FromKeyValues(const KeyValues& values) {
  GridConfig grid;
  grid.run = BuildRun(values, {"lr", "batch_size", "stride"});
  if (const auto it = values.find("lr"); it != values.end()) {
    grid.lrs = ParseList<double>("lr", it->second);
  } else {
    grid.lrs = {grid.run.train.lr};
  }
  if (const auto it = values.find("batch_size"); it != values.end()) {
    grid.batch_sizes = ParseList<int>("batch_size", it->second);
  } else {
    grid.batch_sizes = {grid.run.train.batch_size};
  }
  if (const auto it = values.find("stride"); it != values.end()) {
    grid.strides = ParseList<int>("stride", it->second);
  } else {
    grid.strides = {grid.run.train.stride};
  }
  if (const auto it = values.find("grid_workers"); it != values.end()) {
    grid.grid_workers = ParseNumber<int>("grid_workers", it->second);
  }
  grid.run.train.lr = grid.lrs.front();
  grid.run.train.batch_size = grid.batch_sizes.front();
  grid.run.train.stride = grid.strides.front();
  return grid;
}

void GridConfig::Validate() const {
  run.Validate();
  if (grid_workers < 1) BadField("grid_workers", "must be >= 1");
  RunConfig probe = run;
  for (const double lr : lrs) {
    probe.train.lr = lr;
    probe.Validate();
  }
  probe.train.lr = run.train.lr;
  for (const int b : batch_sizes) {
    probe.train.batch_size = b;
    probe.Validate();
  }
  probe.train.batch_size = run.train.batch_size;
  if (run.train.head == HeadKind::kToken) {
    for (const int s : strides) {
      probe.train.stride = s;
      probe.Validate();
    }
  }
}

}  // namespace tokcls
