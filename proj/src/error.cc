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

#include "tokcls/error.h"

namespace tokcls {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kBadLabel: return "BadLabel";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kBadStride: return "BadStride";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInconsistentChunkSet: return "InconsistentChunkSet";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kLengthExceeded: return "LengthExceeded";
    case ErrorCode::kIdOutOfRange: return "IdOutOfRange";
    case ErrorCode::kNoRealTokens: return "NoRealTokens";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kBadCheckpoint: return "BadCheckpoint";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code),
      detail_(message) {}

}  // namespace tokcls
