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

// tokcls command-line entry point: vocab, train, grid, eval, predict, stats.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tokcls/checkpoint.h"
#include "tokcls/config.h"
#include "tokcls/corpus.h"
#include "tokcls/error.h"
#include "tokcls/metrics.h"
#include "tokcls/report.h"
#include "tokcls/tokenizer.h"
#include "tokcls/train.h"

namespace fs = std::filesystem;

namespace tokcls {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void RequireFile(const fs::path& path, const std::string& what) {
  if (path.empty()) throw UsageError("no " + what + " given");
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path.string());
}

void WriteFile(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + path.string());
}

std::optional<DataFormat> FormatOption(const std::string& name) {
  if (name.empty() || name == "auto") return std::nullopt;
  return ParseDataFormat(name);
}

DataFormat FormatFor(const std::optional<DataFormat>& format, const fs::path& path) {
  return format ? *format : FormatFromPath(path);
}

std::string Dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

// Flags that mirror config-file keys. Values are kept as text and merged
// over the file before the typed config is built.
struct ConfigFlags {
  std::string config_path;
  KeyValues overrides;

  void Attach(CLI::App* cmd, bool grid) {
    cmd->add_option("-c,--config", config_path, "key=value config file");
    static const std::vector<std::pair<std::string, std::string>> kFlags = {
        {"train", "training set (tsv or jsonl)"},
        {"test", "test set used for epoch selection"},
        {"vocab", "vocabulary file; built from the training set when absent"},
        {"out", "output directory"},
        {"format", "tsv, jsonl or auto"},
        {"vocab_max_size", "vocabulary capacity including specials"},
        {"vocab_min_freq", "minimum token frequency"},
        {"max_len", "chunk length in tokens"},
        {"hidden", "encoder width"},
        {"layers", "encoder layers"},
        {"heads", "attention heads"},
        {"ffn", "feed-forward width"},
        {"num_labels", "number of classes"},
        {"head", "token or sequence"},
        {"lr", "learning rate"},
        {"batch_size", "samples per step"},
        {"stride", "overlap between consecutive chunks"},
        {"max_epochs", "training epochs"},
        {"beta1", "Adam beta1"},
        {"beta2", "Adam beta2"},
        {"epsilon", "Adam epsilon"},
        {"seed", "seed for initialization and shuffling"},
        {"aggregation", "mean_label, majority or mean_prob"},
        {"workers", "evaluation threads"},
    };
    for (const auto& [key, help] : kFlags) {
      std::string text = help;
      if (grid && (key == "lr" || key == "batch_size" || key == "stride")) {
        text += " (comma-separated list)";
      }
      const std::string name = key;
      cmd->add_option_function<std::string>(
          "--" + Dashed(key), [this, name](const std::string& v) { overrides[name] = v; },
          text)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
    if (grid) {
      cmd->add_option_function<std::string>(
          "--grid-workers",
          [this](const std::string& v) { overrides["grid_workers"] = v; },
          "grid cells trained concurrently");
    }
  }

  KeyValues Merged() const {
    KeyValues values;
    if (!config_path.empty()) {
      RequireFile(config_path, "config file");
      values = LoadKeyValueFile(config_path);
    }
    for (const auto& [key, value] : overrides) values[key] = value;
    return values;
  }
};

Vocab VocabFor(const RunConfig& run, const Dataset& train) {
  if (!run.vocab_path.empty()) {
    RequireFile(run.vocab_path, "vocabulary file");
    return Vocab::Load(run.vocab_path);
  }
  return BuildVocab(train, run.vocab_max_size, run.vocab_min_freq);
}

struct TrainingData {
  Dataset train;
  Dataset test;
  Vocab vocab;
};

TrainingData LoadTrainingData(RunConfig& run) {
  RequireFile(run.train_path, "training set");
  RequireFile(run.test_path, "test set");
  TrainingData data;
  const int k = run.model.num_labels;
  data.train = LoadDataset(run.train_path, run.FormatFor(run.train_path), k);
  data.test = LoadDataset(run.test_path, run.FormatFor(run.test_path), k);
  data.vocab = VocabFor(run, data.train);
  run.model.vocab_size = data.vocab.size();
  return data;
}

Checkpoint MakeCheckpoint(const Vocab& vocab, const FitResult& fit, const TrainConfig& train) {
  Checkpoint checkpoint;
  checkpoint.vocab = vocab;
  checkpoint.params = fit.params;
  checkpoint.provenance.train = train;
  checkpoint.provenance.best_epoch = fit.best_epoch;
  const EpochRecord& best = fit.history.at(fit.best_epoch - 1);
  checkpoint.provenance.test_accuracy = best.test_accuracy;
  checkpoint.provenance.test_qwk = best.test_qwk;
  checkpoint.provenance.test_smd = best.test_smd;
  return checkpoint;
}

// ---------------------------------------------------------------------------

struct VocabArgs {
  std::string data;
  std::string out;
  std::string format;
  int max_size = 30000;
  int min_freq = 1;
};

int RunVocab(const VocabArgs& args) {
  RequireFile(args.data, "corpus");
  const Dataset corpus = LoadDataset(args.data, FormatFor(FormatOption(args.format), args.data));
  const Vocab vocab = BuildVocab(corpus, args.max_size, args.min_freq);
  WriteFile(args.out, vocab.Serialize());
  fmt::print("wrote {} tokens to {}\n", vocab.size(), args.out);
  return kExitOk;
}

int RunTrain(const ConfigFlags& flags) {
  RunConfig run = RunConfig::FromKeyValues(flags.Merged());
  run.Validate();
  TrainingData data = LoadTrainingData(run);
  const FitResult fit =
      Fit(run.train, run.model, data.vocab, data.train, data.test, [](const EpochRecord& r) {
        fmt::print(stderr, "epoch {:>3}  loss {:.4f}  test acc {}  test qwk {}\n", r.epoch,
                   r.train_loss, FormatMetric(r.test_accuracy), FormatMetric(r.test_qwk));
      });
  fs::create_directories(run.out_dir);
  SaveCheckpoint(MakeCheckpoint(data.vocab, fit, run.train), run.out_dir / "model.ckpt");
  WriteFile(run.out_dir / "history.tsv", FormatHistory(fit.history));
  WriteFile(run.out_dir / "vocab.txt", data.vocab.Serialize());
  const EpochRecord& best = fit.history.at(fit.best_epoch - 1);
  fmt::print("{}: best epoch {} of {}, test acc {}, test qwk {}\n",
             HeadDisplayName(run.train.head), fit.best_epoch, run.train.max_epochs,
             FormatMetric(best.test_accuracy), FormatMetric(best.test_qwk));
  fmt::print("wrote {}\n", (run.out_dir / "model.ckpt").string());
  return kExitOk;
}

int RunGrid(const ConfigFlags& flags) {
  GridConfig grid = GridConfig::FromKeyValues(flags.Merged());
  grid.Validate();
  TrainingData data = LoadTrainingData(grid.run);
  GridSpec spec;
  spec.lrs = grid.lrs;
  spec.batch_sizes = grid.batch_sizes;
  spec.strides = grid.strides;
  spec.base = grid.run.train;
  spec.model = grid.run.model;
  spec.workers = grid.grid_workers;
  const GridOutcome outcome = GridSearch(spec, data.vocab, data.train, data.test);

  const fs::path& out = grid.run.out_dir;
  fs::create_directories(out);
  const std::string table = FormatGridTable(outcome.rows, spec.base.head);
  std::string records;
  for (const GridResult& row : outcome.rows) records += GridResultJson(row) + "\n";
  WriteFile(out / "results.txt", table);
  WriteFile(out / "results.jsonl", records);
  WriteFile(out / "vocab.txt", data.vocab.Serialize());
  fmt::print("{}", table);
  if (!outcome.best) {
    fmt::print(stderr, "every grid cell failed; no checkpoint written\n");
    return kExitRuntime;
  }
  TrainConfig best_train = spec.base;
  best_train.lr = outcome.best_row->lr;
  best_train.batch_size = outcome.best_row->batch_size;
  if (spec.base.head == HeadKind::kToken) best_train.stride = outcome.best_row->stride;
  SaveCheckpoint(MakeCheckpoint(data.vocab, *outcome.best, best_train), out / "best.ckpt");
  fmt::print("best experiment {}; wrote {}\n", outcome.best_row->experiment_id,
             (out / "best.ckpt").string());
  return kExitOk;
}

struct ModelArgs {
  std::string checkpoint;
  std::string head;
  std::string aggregation;
  std::string format;
  int stride = -1;
  int workers = 1;
};

void AttachModelArgs(CLI::App* cmd, ModelArgs* args) {
  cmd->add_option("-m,--checkpoint", args->checkpoint, "model checkpoint")->required();
  cmd->add_option("--head", args->head, "token or sequence (default: as trained)");
  cmd->add_option("--stride", args->stride, "chunk overlap (default: as trained)");
  cmd->add_option("--aggregation", args->aggregation,
                  "mean_label, majority or mean_prob (default: as trained)");
  cmd->add_option("--format", args->format, "tsv, jsonl or auto");
  cmd->add_option("--workers", args->workers, "prediction threads");
}

struct LoadedModel {
  Checkpoint checkpoint;
  HeadKind head;
  EvalOptions options;
};

LoadedModel LoadModel(const ModelArgs& args) {
  RequireFile(args.checkpoint, "checkpoint");
  LoadedModel model{LoadCheckpoint(args.checkpoint), HeadKind::kToken, {}};
  const TrainConfig& trained = model.checkpoint.provenance.train;
  model.head = args.head.empty() ? trained.head : ParseHeadKind(args.head);
  model.options.stride = args.stride >= 0 ? args.stride : trained.stride;
  model.options.aggregation =
      args.aggregation.empty() ? trained.aggregation : ParseAggregation(args.aggregation);
  model.options.workers = args.workers;
  if (args.workers < 1) throw Error(ErrorCode::kBadConfig, "field 'workers': must be >= 1");
  const int max_len = model.checkpoint.params.config.max_len;
  if (model.head == HeadKind::kToken && model.options.stride >= max_len) {
    throw Error(ErrorCode::kBadConfig,
                fmt::format("field 'stride': must be in [0, max_len={})", max_len));
  }
  return model;
}

struct EvalArgs {
  ModelArgs model;
  std::string data;
  std::string vocab;
  std::string json;
};

int RunEval(const EvalArgs& args) {
  const LoadedModel model = LoadModel(args.model);
  const Vocab& vocab = model.checkpoint.vocab;
  if (!args.vocab.empty()) {
    RequireFile(args.vocab, "vocabulary file");
    const Vocab given = Vocab::Load(args.vocab);
    if (!(given == vocab)) {
      throw UsageError(fmt::format(
          "vocabulary {} ({} tokens) does not match the checkpoint vocabulary ({} tokens)",
          args.vocab, given.size(), vocab.size()));
    }
  }
  RequireFile(args.data, "dataset");
  const int k = model.checkpoint.params.config.num_labels;
  const Dataset ds =
      LoadDataset(args.data, FormatFor(FormatOption(args.model.format), args.data), k);
  const EvalReport report =
      Evaluate(model.checkpoint.params, model.head, ds, vocab, model.options);
  const std::string name = HeadDisplayName(model.head);
  fmt::print("{}\n{}", FormatEvalTable({{name, report}}), FormatConfusion(report.confusion));
  if (!args.json.empty()) WriteFile(args.json, EvalReportJson(name, report) + "\n");
  return kExitOk;
}

struct PredictArgs {
  ModelArgs model;
  std::string input;
  std::string output;
};

int RunPredict(const PredictArgs& args) {
  const LoadedModel model = LoadModel(args.model);
  RequireFile(args.input, "input file");
  const std::vector<TextPair> pairs =
      LoadTextPairs(args.input, FormatFor(FormatOption(args.model.format), args.input));
  const std::vector<TextPrediction> predictions = PredictPairs(
      model.checkpoint.params, model.head, pairs, model.checkpoint.vocab, model.options);
  std::string lines;
  for (const TextPrediction& p : predictions) lines += PredictionJson(p) + "\n";
  if (args.output.empty()) {
    std::fwrite(lines.data(), 1, lines.size(), stdout);
  } else {
    WriteFile(args.output, lines);
  }
  return kExitOk;
}

struct StatsArgs {
  std::vector<std::string> data;
  std::string vocab;
  std::string format;
  int threshold = 256;
  int num_labels = kDefaultNumLabels;
};

int RunStats(const StatsArgs& args) {
  Vocab vocab;
  if (!args.vocab.empty()) {
    RequireFile(args.vocab, "vocabulary file");
    vocab = Vocab::Load(args.vocab);
  }
  std::vector<std::pair<std::string, DataStats>> rows;
  for (const std::string& path : args.data) {
    RequireFile(path, "dataset");
    const Dataset ds =
        LoadDataset(path, FormatFor(FormatOption(args.format), path), args.num_labels);
    rows.emplace_back(ds.name, ComputeStats(ds, vocab, args.threshold, args.num_labels));
  }
  fmt::print("{}", FormatStatsTable(rows));
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Token versus sequence classification heads for long-text NLI"};
  app.require_subcommand(1);
  std::function<int()> command;

  VocabArgs vocab_args;
  CLI::App* vocab = app.add_subcommand("vocab", "build a vocabulary file from a corpus");
  vocab->add_option("-d,--data", vocab_args.data, "corpus (tsv or jsonl)")->required();
  vocab->add_option("-o,--out", vocab_args.out, "vocabulary file to write")->required();
  vocab->add_option("--max-size", vocab_args.max_size, "capacity including specials");
  vocab->add_option("--min-freq", vocab_args.min_freq, "minimum token frequency");
  vocab->add_option("--format", vocab_args.format, "tsv, jsonl or auto");
  vocab->callback([&] { command = [&] { return RunVocab(vocab_args); }; });

  ConfigFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "train one model and keep its best epoch");
  train_flags.Attach(train, false);
  train->callback([&] { command = [&] { return RunTrain(train_flags); }; });

  ConfigFlags grid_flags;
  CLI::App* grid = app.add_subcommand("grid", "grid search over lr, batch size and stride");
  grid_flags.Attach(grid, true);
  grid->callback([&] { command = [&] { return RunGrid(grid_flags); }; });

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a labeled dataset");
  AttachModelArgs(eval, &eval_args.model);
  eval->add_option("-d,--data", eval_args.data, "labeled dataset")->required();
  eval->add_option("--vocab", eval_args.vocab, "vocabulary file expected to match");
  eval->add_option("--json", eval_args.json, "also write the report as JSON");
  eval->callback([&] { command = [&] { return RunEval(eval_args); }; });

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "label text pairs, one JSON line each");
  AttachModelArgs(predict, &predict_args.model);
  predict->add_option("-i,--input", predict_args.input, "text pairs")->required();
  predict->add_option("-o,--output", predict_args.output, "output file (default stdout)");
  predict->callback([&] { command = [&] { return RunPredict(predict_args); }; });

  StatsArgs stats_args;
  CLI::App* stats = app.add_subcommand("stats", "summarize datasets");
  stats->add_option("-d,--data", stats_args.data, "dataset, repeatable")->required();
  stats->add_option("--threshold", stats_args.threshold, "long-text token threshold");
  stats->add_option("--vocab", stats_args.vocab, "vocabulary file");
  stats->add_option("--num-labels", stats_args.num_labels, "number of classes");
  stats->add_option("--format", stats_args.format, "tsv, jsonl or auto");
  stats->callback([&] { command = [&] { return RunStats(stats_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    return command();
  } catch (const UsageError& e) {
    fmt::print(stderr, "tokcls: {}\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    fmt::print(stderr, "tokcls: {}\n", e.what());
    return e.code() == ErrorCode::kBadConfig ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    fmt::print(stderr, "tokcls: {}\n", e.what());
    return kExitRuntime;
  }
}

}  // namespace
}  // namespace tokcls

int main(int argc, char** argv) { return tokcls::Main(argc, argv); }
