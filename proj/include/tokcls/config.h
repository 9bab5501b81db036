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

// Flat key=value run configuration shared by the train, eval and grid
// commands. Command-line flags are merged on top of file values before the
// typed config is built, so both go through the same validation.

#ifndef TOKCLS_CONFIG_H_
#define TOKCLS_CONFIG_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tokcls/corpus.h"
#include "tokcls/encoder.h"
#include "tokcls/train.h"

namespace tokcls {

using KeyValues = std::map<std::string, std::string>;

// Lines of `key = value`; blank lines and lines starting with '#' are
// skipped. Keys may use '-' or '_' interchangeably.
KeyValues ParseKeyValues(std::string_view text, const std::string& source = "config");
KeyValues LoadKeyValueFile(const std::filesystem::path& path);

struct RunConfig {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path vocab_path;  // built from the training set when empty
  std::filesystem::path out_dir = "out";
  std::optional<DataFormat> format;  // inferred per file when unset
  int vocab_max_size = 30000;
  int vocab_min_freq = 1;
  ModelConfig model;  // vocab_size filled in once the vocabulary is known
  TrainConfig train;

  // Unknown keys and malformed values throw kBadConfig naming the field.
  static RunConfig FromKeyValues(const KeyValues& values);

  void Validate() const;
  DataFormat FormatFor(const std::filesystem::path& path) const;
};

struct GridConfig {
  RunConfig run;
  std::vector<double> lrs;
  std::vector<int> batch_sizes;
  std::vector<int> strides;
  int grid_workers = 1;

  // lr, batch_size and stride accept comma-separated lists.
  static GridConfig FromKeyValues(const KeyValues& values);
  void Validate() const;
};

}  // namespace tokcls

#endif  // TOKCLS_CONFIG_H_
