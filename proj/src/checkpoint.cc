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

#include "tokcls/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokcls/error.h"

namespace tokcls {
namespace {

using nlohmann::json;

[[noreturn]] void Bad(const std::string& what) {
  throw Error(ErrorCode::kBadCheckpoint, what);
}

class Writer {
 public:
  void Bytes(std::string_view s) { out_.append(s); }
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void U64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void F32(float f) { U32(std::bit_cast<uint32_t>(f)); }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view Bytes(size_t n) {
    if (bytes_.size() - pos_ < n) Bad("truncated checkpoint");
    const std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  uint32_t U32() {
    const std::string_view s = Bytes(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(s[i])) << (8 * i);
    return v;
  }
  uint64_t U64() {
    const std::string_view s = Bytes(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(s[i])) << (8 * i);
    return v;
  }
  float F32() { return std::bit_cast<float>(U32()); }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

json ConfigToJson(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size}, {"max_len", c.max_len},
              {"hidden", c.hidden},         {"layers", c.layers},
              {"heads", c.heads},           {"ffn", c.ffn},
              {"num_labels", c.num_labels}, {"seed", c.seed}};
}

ModelConfig ConfigFromJson(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn = j.at("ffn").get<int>();
  c.num_labels = j.at("num_labels").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

json ProvenanceToJson(const TrainingProvenance& p) {
  const TrainConfig& t = p.train;
  json j{{"head", std::string(HeadKindName(t.head))},
         {"lr", t.lr},
         {"batch_size", t.batch_size},
         {"stride", t.stride},
         {"max_epochs", t.max_epochs},
         {"beta1", t.beta1},
         {"beta2", t.beta2},
         {"epsilon", t.epsilon},
         {"seed", t.seed},
         {"aggregation", std::string(AggregationName(t.aggregation))},
         {"best_epoch", p.best_epoch},
         {"test_accuracy", p.test_accuracy},
         {"test_qwk", p.test_qwk}};
  j["test_smd"] = p.test_smd ? json(*p.test_smd) : json(nullptr);
  return j;
}

TrainingProvenance ProvenanceFromJson(const json& j) {
  TrainingProvenance p;
  p.train.head = ParseHeadKind(j.at("head").get<std::string>());
  p.train.lr = j.at("lr").get<double>();
  p.train.batch_size = j.at("batch_size").get<int>();
  p.train.stride = j.at("stride").get<int>();
  p.train.max_epochs = j.at("max_epochs").get<int>();
  p.train.beta1 = j.at("beta1").get<double>();
  p.train.beta2 = j.at("beta2").get<double>();
  p.train.epsilon = j.at("epsilon").get<double>();
  p.train.seed = j.at("seed").get<uint64_t>();
  p.train.aggregation = ParseAggregation(j.at("aggregation").get<std::string>());
  p.best_epoch = j.at("best_epoch").get<int>();
  p.test_accuracy = j.at("test_accuracy").get<double>();
  p.test_qwk = j.at("test_qwk").get<double>();
  if (!j.at("test_smd").is_null()) p.test_smd = j.at("test_smd").get<double>();
  return p;
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& checkpoint) {
  const ModelParams<float>& params = checkpoint.params;
  if (params.config.vocab_size != checkpoint.vocab.size()) {
    Bad("vocabulary has " + std::to_string(checkpoint.vocab.size()) +
        " tokens but model expects " + std::to_string(params.config.vocab_size));
  }
  const json metadata{{"model_config", ConfigToJson(params.config)},
                      {"vocab", checkpoint.vocab.tokens()},
                      {"provenance", ProvenanceToJson(checkpoint.provenance)}};
  const std::string meta = metadata.dump();

  Writer w;
  w.Bytes(kCheckpointMagic);
  w.U32(checkpoint.format_version);
  w.U64(meta.size());
  w.Bytes(meta);
  uint32_t count = 0;
  params.ForEachTensor([&count](const std::string&, const Matrix<float>&) { ++count; });
  w.U32(count);
  params.ForEachTensor([&w](const std::string& name, const Matrix<float>& m) {
    w.U32(static_cast<uint32_t>(name.size()));
    w.Bytes(name);
    w.U32(2);
    w.U64(static_cast<uint64_t>(m.rows()));
    w.U64(static_cast<uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) w.F32(m.data()[i]);
  });
  return w.Take();
}

Checkpoint ParseCheckpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.Bytes(kCheckpointMagic.size()) != kCheckpointMagic) Bad("not a tokcls checkpoint");
  Checkpoint checkpoint;
  checkpoint.format_version = r.U32();
  if (checkpoint.format_version != kCheckpointFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "checkpoint format version " + std::to_string(checkpoint.format_version) +
                    ", this build reads version " +
                    std::to_string(kCheckpointFormatVersion));
  }
  const uint64_t meta_size = r.U64();
  const std::string_view meta = r.Bytes(meta_size);
  ModelConfig config;
  try {
    const json metadata = json::parse(meta);
    config = ConfigFromJson(metadata.at("model_config"));
    checkpoint.vocab =
        Vocab::FromTokens(metadata.at("vocab").get<std::vector<std::string>>());
    checkpoint.provenance = ProvenanceFromJson(metadata.at("provenance"));
  } catch (const json::exception& e) {
    Bad(std::string("malformed metadata: ") + e.what());
  } catch (const Error& e) {
    Bad(std::string("malformed metadata: ") + e.detail());
  }
  try {
    config.Validate();
  } catch (const Error& e) {
    Bad(e.detail());
  }
  if (config.vocab_size != checkpoint.vocab.size()) {
    Bad("embedded vocabulary has " + std::to_string(checkpoint.vocab.size()) +
        " tokens, model config says " + std::to_string(config.vocab_size));
  }

  checkpoint.params = InitParams<float>(config);
  uint32_t expected = 0;
  checkpoint.params.ForEachTensor(
      [&expected](const std::string&, const Matrix<float>&) { ++expected; });
  const uint32_t count = r.U32();
  if (count != expected) {
    Bad("expected " + std::to_string(expected) + " tensors, found " + std::to_string(count));
  }
  checkpoint.params.ForEachTensor([&r](const std::string& name, Matrix<float>& m) {
    const uint32_t name_size = r.U32();
    const std::string_view stored = r.Bytes(name_size);
    if (stored != name) {
      Bad("expected tensor '" + name + "', found '" + std::string(stored) + "'");
    }
    const uint32_t rank = r.U32();
    if (rank != 2) Bad("tensor '" + name + "' has rank " + std::to_string(rank));
    const uint64_t rows = r.U64();
    const uint64_t cols = r.U64();
    if (rows != static_cast<uint64_t>(m.rows()) || cols != static_cast<uint64_t>(m.cols())) {
      Bad("tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
          std::to_string(cols) + ", config implies " + std::to_string(m.rows()) +
          "x" + std::to_string(m.cols()));
    }
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.F32();
  });
  if (!r.AtEnd()) Bad("trailing bytes after last tensor");
  return checkpoint;
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = SerializeCheckpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return ParseCheckpoint(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace tokcls
