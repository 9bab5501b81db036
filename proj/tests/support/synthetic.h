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

// Synthetic datasets shared by the unit, integration and acceptance tests.

#ifndef TOKCLS_TESTS_SUPPORT_SYNTHETIC_H_
#define TOKCLS_TESTS_SUPPORT_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "tokcls/corpus.h"

namespace tokcls::testing {

// Short texts; each premise carries one keyword that names its class among
// random filler words.
Dataset SeparableDataset(int size, uint64_t seed, int num_labels = 3);

// Long texts whose first `max_len` encoded positions are label-independent
// filler; every class-bearing token sits beyond position max_len.
Dataset LongTextDataset(int size, uint64_t seed, int max_len, int num_labels = 3);

void WriteTsv(const Dataset& dataset, const std::filesystem::path& path);
void WriteJsonl(const Dataset& dataset, const std::filesystem::path& path);

// Fresh empty directory under the system temp dir.
std::filesystem::path MakeTempDir(const std::string& tag);

std::string ReadBytes(const std::filesystem::path& path);

}  // namespace tokcls::testing

#endif  // TOKCLS_TESTS_SUPPORT_SYNTHETIC_H_
