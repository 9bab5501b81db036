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

#include "tokcls/tokenizer.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "tokcls/error.h"

namespace tokcls {
namespace {

bool IsSplitPunctuation(UChar32 c) {
  if (c < 128) {
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) ||
           (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
  }
  return u_ispunct(c);
}

bool IsSeparator(UChar32 c) {
  return u_isUWhiteSpace(c) || u_charType(c) == U_CONTROL_CHAR;
}

const std::vector<std::string>& SpecialTokens() {
  static const std::vector<std::string> specials = {
      std::string(kPadToken), std::string(kUnkToken), std::string(kClsToken),
      std::string(kSepToken)};
  return specials;
}

void AppendIds(std::string_view text, const Vocab& vocab, std::vector<int>& out) {
  for (const std::string& token : PreTokenize(text)) {
    out.push_back(vocab.IdOf(token));
  }
}

[[noreturn]] void Inconsistent(const ChunkSet& cs, const std::string& what) {
  throw Error(ErrorCode::kInconsistentChunkSet,
              "example " + std::to_string(cs.example_id) + ": " + what);
}

}  // namespace

std::vector<std::string> PreTokenize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::kIoFailure, "ICU NFKC normalizer unavailable");
  }
  icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfkc->normalize(input, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::kIoFailure, "NFKC normalization failed");
  }
  normalized.toLower(icu::Locale::getRoot());

  std::vector<std::string> tokens;
  icu::UnicodeString current;
  auto flush = [&] {
    if (current.isEmpty()) return;
    std::string utf8;
    current.toUTF8String(utf8);
    tokens.push_back(std::move(utf8));
    current.remove();
  };
  for (int32_t i = 0; i < normalized.length();) {
    const UChar32 c = normalized.char32At(i);
    i = normalized.moveIndex32(i, 1);
    if (IsSeparator(c)) {
      flush();
    } else if (IsSplitPunctuation(c)) {
      flush();
      current.append(c);
      flush();
    } else {
      current.append(c);
    }
  }
  flush();
  return tokens;
}

Vocab::Vocab() : Vocab(FromTokens(SpecialTokens())) {}

Vocab Vocab::FromTokens(std::vector<std::string> tokens) {
  const auto& specials = SpecialTokens();
  if (tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw Error(ErrorCode::kBadConfig,
                "vocabulary must begin with [PAD] [UNK] [CLS] [SEP]");
  }
  Vocab vocab{EmptyTag{}};
  vocab.token_to_id_.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty() ||
        tokens[i].find_first_of(" \t\r\n") != std::string::npos) {
      throw Error(ErrorCode::kBadConfig,
                  "vocabulary token " + std::to_string(i) + " is malformed");
    }
    if (!vocab.token_to_id_.emplace(tokens[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::kBadConfig,
                  "duplicate vocabulary token '" + tokens[i] + "'");
    }
  }
  vocab.id_to_token_ = std::move(tokens);
  return vocab;
}

Vocab Vocab::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return FromTokens(std::move(tokens));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string Vocab::Serialize() const {
  std::string out;
  for (const std::string& token : id_to_token_) {
    out.append(token).push_back('\n');
  }
  return out;
}

void Vocab::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << Serialize();
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + path.string());
}

bool Vocab::Contains(std::string_view token) const {
  return token_to_id_.find(token) != token_to_id_.end();
}

int Vocab::IdOf(std::string_view token) const {
  const auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocab::TokenOf(int id) const {
  if (id < 0 || id >= size()) {
    throw Error(ErrorCode::kIdOutOfRange, "token id " + std::to_string(id));
  }
  return id_to_token_[id];
}

Vocab BuildVocab(const Dataset& corpus, int max_size, int min_freq) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "cannot build a vocabulary from no text");
  }
  if (max_size < kNumSpecialTokens) {
    throw Error(ErrorCode::kBadConfig,
                "max_size must be at least " + std::to_string(kNumSpecialTokens));
  }
  std::map<std::string, int64_t> counts;
  for (const LabeledExample& example : corpus.examples) {
    for (const std::string_view text : {std::string_view(example.premise),
                                        std::string_view(example.hypothesis)}) {
      for (std::string& token : PreTokenize(text)) ++counts[std::move(token)];
    }
  }
  std::vector<std::pair<std::string, int64_t>> ranked;
  for (auto& [token, count] : counts) {
    if (count >= min_freq && std::find(SpecialTokens().begin(),
                                       SpecialTokens().end(),
                                       token) == SpecialTokens().end()) {
      ranked.emplace_back(token, count);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // map order already lexicographic
  });
  std::vector<std::string> tokens = SpecialTokens();
  for (auto& [token, count] : ranked) {
    if (static_cast<int>(tokens.size()) >= max_size) break;
    tokens.push_back(token);
  }
  return Vocab::FromTokens(std::move(tokens));
}

std::vector<int> Encode(std::string_view premise, std::string_view hypothesis,
                        const Vocab& vocab) {
  std::vector<int> ids;
  ids.push_back(kClsId);
  AppendIds(premise, vocab, ids);
  ids.push_back(kSepId);
  AppendIds(hypothesis, vocab, ids);
  ids.push_back(kSepId);
  return ids;
}

std::vector<std::string> Decode(std::span<const int> ids, const Vocab& vocab,
                                bool skip_special) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (const int id : ids) {
    if (skip_special && id >= 0 && id < kNumSpecialTokens && id != kUnkId) {
      continue;
    }
    tokens.push_back(vocab.TokenOf(id));
  }
  return tokens;
}

int Chunk::num_real() const {
  return static_cast<int>(
      std::count(attention_mask.begin(), attention_mask.end(), uint8_t{1}));
}

int ChunkCount(int length, int max_len, int stride) {
  if (max_len < 1 || stride < 0 || stride >= max_len) {
    throw Error(ErrorCode::kBadStride,
                "stride " + std::to_string(stride) + " must be in [0, " +
                    std::to_string(max_len) + ")");
  }
  if (length <= max_len) return 1;
  const int step = max_len - stride;
  return (length - max_len + step - 1) / step + 1;
}

ChunkSet MakeChunks(std::span<const int> ids, int max_len, int stride,
                    int64_t example_id) {
  if (ids.empty()) throw Error(ErrorCode::kEmptyInput, "cannot chunk an empty sequence");
  const int length = static_cast<int>(ids.size());
  const int count = ChunkCount(length, max_len, stride);
  ChunkSet cs;
  cs.example_id = example_id;
  cs.original_length = length;
  cs.stride = stride;
  cs.max_len = max_len;
  cs.chunks.reserve(count);
  for (int k = 0; k < count; ++k) {
    const int begin = k * cs.step();
    const int end = std::min(begin + max_len, length);
    Chunk chunk;
    chunk.input_ids.assign(max_len, kPadId);
    chunk.attention_mask.assign(max_len, 0);
    std::copy(ids.begin() + begin, ids.begin() + end, chunk.input_ids.begin());
    std::fill_n(chunk.attention_mask.begin(), end - begin, uint8_t{1});
    cs.chunks.push_back(std::move(chunk));
  }
  return cs;
}

void ValidateChunkSet(const ChunkSet& cs) {
  if (cs.max_len < 1 || cs.stride < 0 || cs.stride >= cs.max_len) {
    Inconsistent(cs, "stride/max_len out of range");
  }
  if (cs.original_length < 1) Inconsistent(cs, "original_length must be positive");
  const int expected = ChunkCount(cs.original_length, cs.max_len, cs.stride);
  if (static_cast<int>(cs.chunks.size()) != expected) {
    Inconsistent(cs, "expected " + std::to_string(expected) + " chunks, found " +
                         std::to_string(cs.chunks.size()));
  }
  for (int k = 0; k < expected; ++k) {
    const Chunk& chunk = cs.chunks[k];
    if (static_cast<int>(chunk.input_ids.size()) != cs.max_len ||
        static_cast<int>(chunk.attention_mask.size()) != cs.max_len) {
      Inconsistent(cs, "chunk " + std::to_string(k) + " has wrong length");
    }
    const int real =
        std::min(cs.max_len, cs.original_length - k * cs.step());
    for (int i = 0; i < cs.max_len; ++i) {
      const uint8_t want = i < real ? 1 : 0;
      if (chunk.attention_mask[i] != want) {
        Inconsistent(cs, "chunk " + std::to_string(k) + " mask disagrees at " +
                             std::to_string(i));
      }
      if (want == 0 && chunk.input_ids[i] != kPadId) {
        Inconsistent(cs, "chunk " + std::to_string(k) + " has non-pad id at " +
                             std::to_string(i));
      }
    }
    if (k > 0) {
      const Chunk& previous = cs.chunks[k - 1];
      if (!std::equal(chunk.input_ids.begin(), chunk.input_ids.begin() + cs.stride,
                      previous.input_ids.begin() + cs.step())) {
        Inconsistent(cs, "chunk " + std::to_string(k) +
                             " overlap does not match its predecessor");
      }
    }
  }
}

std::vector<int> Dechunk(const ChunkSet& cs) {
  ValidateChunkSet(cs);
  std::vector<int> ids;
  ids.reserve(cs.original_length);
  for (size_t k = 0; k < cs.chunks.size(); ++k) {
    const Chunk& chunk = cs.chunks[k];
    const int skip = k == 0 ? 0 : cs.stride;
    const int real = chunk.num_real();
    ids.insert(ids.end(), chunk.input_ids.begin() + skip,
               chunk.input_ids.begin() + real);
  }
  return ids;
}

}  // namespace tokcls
