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

#ifndef TOKCLS_ERROR_H_
#define TOKCLS_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace tokcls {

enum class ErrorCode {
  kMissingField,
  kBadLabel,
  kIoFailure,
  kEmptyText,
  kEmptyDataset,
  kDuplicateId,
  kEmptyCorpus,
  kBadStride,
  kEmptyInput,
  kInconsistentChunkSet,
  kBadConfig,
  kLengthExceeded,
  kIdOutOfRange,
  kNoRealTokens,
  kLengthMismatch,
  kDegenerateDistribution,
  kDegenerateVariance,
  kDivergence,
  kBadCheckpoint,
  kVersionMismatch,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures surface as this exception; `code()` identifies the
// failure class so callers (and tests) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  // The message without the error-code prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace tokcls

#endif  // TOKCLS_ERROR_H_
