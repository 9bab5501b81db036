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

// Single-file model checkpoints.
//
// Layout (all integers little-endian):
//   "TOKCLSCK"                 8-byte magic
//   u32 format_version
//   u64 metadata length, then that many bytes of UTF-8 JSON holding the
//       model config, the vocabulary and the training provenance
//   u32 tensor count, then per tensor:
//       u32 name length, name bytes, u32 rank, rank x u64 dims,
//       prod(dims) x f32 payload in row-major order

#ifndef TOKCLS_CHECKPOINT_H_
#define TOKCLS_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "tokcls/encoder.h"
#include "tokcls/tokenizer.h"
#include "tokcls/train.h"

namespace tokcls {

inline constexpr uint32_t kCheckpointFormatVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "TOKCLSCK";

struct TrainingProvenance {
  TrainConfig train;
  int best_epoch = 0;
  double test_accuracy = 0.0;
  double test_qwk = 0.0;
  std::optional<double> test_smd;
};

struct Checkpoint {
  uint32_t format_version = kCheckpointFormatVersion;
  Vocab vocab;
  ModelParams<float> params;  // params.config is the model config
  TrainingProvenance provenance;
};

std::string SerializeCheckpoint(const Checkpoint& checkpoint);

// Throws kVersionMismatch for another format version and kBadCheckpoint for
// any structural problem (magic, truncation, names, shapes, vocab size).
Checkpoint ParseCheckpoint(std::string_view bytes);

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace tokcls

#endif  // TOKCLS_CHECKPOINT_H_
