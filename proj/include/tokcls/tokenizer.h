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

// Word-level vocabulary, pair encoding with special tokens, and the
// stride-overlap chunking that splits long id streams into fixed-length
// model inputs.

#ifndef TOKCLS_TOKENIZER_H_
#define TOKCLS_TOKENIZER_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokcls/corpus.h"

namespace tokcls {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kNumSpecialTokens = 4;

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

// NFKC-normalizes, lowercases, splits on whitespace and emits every
// punctuation character (Unicode P* categories plus ASCII symbols) as its own
// token.
std::vector<std::string> PreTokenize(std::string_view text);

class Vocab {
 public:
  // Specials only.
  Vocab();

  // `tokens` must start with the four special tokens in id order and contain
  // no duplicates.
  static Vocab FromTokens(std::vector<std::string> tokens);

  // One token per line, line number = id.
  static Vocab Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
  std::string Serialize() const;

  int size() const { return static_cast<int>(id_to_token_.size()); }
  bool Contains(std::string_view token) const;
  // kUnkId for unknown tokens.
  int IdOf(std::string_view token) const;
  const std::string& TokenOf(int id) const;
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  bool operator==(const Vocab& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  struct EmptyTag {};
  explicit Vocab(EmptyTag) {}

  struct Hash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::unordered_map<std::string, int, Hash, std::equal_to<>> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Most frequent pre-tokens first, ties broken lexicographically; tokens rarer
// than `min_freq` are dropped. `max_size` counts the specials.
Vocab BuildVocab(const Dataset& corpus, int max_size, int min_freq = 1);

// [CLS] premise [SEP] hypothesis [SEP].
std::vector<int> Encode(std::string_view premise, std::string_view hypothesis,
                        const Vocab& vocab);

// Maps ids back to token strings, dropping special tokens when asked.
std::vector<std::string> Decode(std::span<const int> ids, const Vocab& vocab,
                                bool skip_special = true);

struct Chunk {
  std::vector<int> input_ids;
  std::vector<uint8_t> attention_mask;

  int num_real() const;
  bool operator==(const Chunk&) const = default;
};

// Chunk k holds original positions [k * step(), k * step() + max_len) clipped
// to original_length, right-padded to max_len. Consecutive chunks share
// `stride` ids.
struct ChunkSet {
  int64_t example_id = 0;
  std::vector<Chunk> chunks;
  int original_length = 0;
  int stride = 0;
  int max_len = 0;

  int step() const { return max_len - stride; }
  bool operator==(const ChunkSet&) const = default;
};

// Closed-form chunk count for `length` ids.
int ChunkCount(int length, int max_len, int stride);

ChunkSet MakeChunks(std::span<const int> ids, int max_len, int stride,
                    int64_t example_id = 0);

// Throws kInconsistentChunkSet when masks, padding, chunk count or the
// overlapped ids contradict the chunk geometry.
void ValidateChunkSet(const ChunkSet& chunks);

// Inverse of MakeChunks.
std::vector<int> Dechunk(const ChunkSet& chunks);

}  // namespace tokcls

#endif  // TOKCLS_TOKENIZER_H_
