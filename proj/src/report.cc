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

#include "tokcls/report.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace tokcls {

std::string FormatTable(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> widths(header.size(), 0);
  for (size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size() && c < widths.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (size_t c = 0; c < widths.size(); ++c) {
      const std::string& cell = c < cells.size() ? cells[c] : std::string();
      if (c > 0) out += "  ";
      out += c == 0 ? fmt::format("{:<{}}", cell, widths[c])
                    : fmt::format("{:>{}}", cell, widths[c]);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  size_t total = 0;
  for (const size_t w : widths) total += w;
  total += 2 * (widths.empty() ? 0 : widths.size() - 1);
  out += std::string(total, '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string FormatMetric(double value) { return fmt::format("{:.3f}", value); }

std::string FormatStatsTable(
    const std::vector<std::pair<std::string, DataStats>>& rows) {
  size_t num_labels = 0;
  int threshold = 0;
  for (const auto& [name, stats] : rows) {
    num_labels = std::max(num_labels, stats.label_percentages.size());
    threshold = stats.threshold;
  }
  std::vector<std::string> header = {"Set", "Samples", "Tokens",
                                     fmt::format("Token > {}", threshold),
                                     "Average Label"};
  for (size_t k = 0; k < num_labels; ++k) header.push_back(fmt::format("% Label {}", k));
  std::vector<std::vector<std::string>> body;
  for (const auto& [name, stats] : rows) {
    std::vector<std::string> row = {name, std::to_string(stats.samples),
                                    std::to_string(stats.total_tokens),
                                    std::to_string(stats.num_over_threshold),
                                    fmt::format("{:.2f}", stats.average_label)};
    for (size_t k = 0; k < num_labels; ++k) {
      row.push_back(k < stats.label_percentages.size()
                        ? fmt::format("{:.2f}", stats.label_percentages[k])
                        : "0.00");
    }
    body.push_back(std::move(row));
  }
  return FormatTable(header, body);
}

std::string FormatEvalTable(
    const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::vector<std::vector<std::string>> body;
  for (const auto& [model, report] : rows) {
    body.push_back({model, FormatMetric(report.accuracy), FormatMetric(report.qwk),
                    report.smd ? FormatMetric(std::abs(*report.smd)) : "n/a"});
  }
  return FormatTable({"Model", "val acc", "val qwk", "val smd"}, body);
}

std::string FormatConfusion(const ConfusionMatrix& confusion) {
  std::vector<std::string> header = {"pred \\ gold"};
  for (int g = 0; g < confusion.num_labels(); ++g) header.push_back(std::to_string(g));
  std::vector<std::vector<std::string>> body;
  for (int p = 0; p < confusion.num_labels(); ++p) {
    std::vector<std::string> row = {std::to_string(p)};
    for (int g = 0; g < confusion.num_labels(); ++g) {
      row.push_back(std::to_string(confusion.at(p, g)));
    }
    body.push_back(std::move(row));
  }
  return FormatTable(header, body);
}

std::string EvalReportJson(const std::string& model, const EvalReport& report) {
  nlohmann::json confusion = nlohmann::json::array();
  for (int p = 0; p < report.confusion.num_labels(); ++p) {
    nlohmann::json row = nlohmann::json::array();
    for (int g = 0; g < report.confusion.num_labels(); ++g) {
      row.push_back(report.confusion.at(p, g));
    }
    confusion.push_back(std::move(row));
  }
  nlohmann::json j{{"model", model},
                   {"n", report.n},
                   {"accuracy", report.accuracy},
                   {"qwk", report.qwk},
                   {"confusion", std::move(confusion)}};
  j["smd"] = report.smd ? nlohmann::json(*report.smd) : nlohmann::json(nullptr);
  return j.dump();
}

std::vector<std::string> GridColumns(HeadKind head) {
  if (head == HeadKind::kToken) {
    return {"experiment", "epoch", "num label", "test acc", "test QWK",
            "stride", "max token", "batch size", "lr"};
  }
  return {"experiment_id", "epoch", "num label", "test acc", "test QWK",
          "batch size", "lr"};
}

std::string FormatGridTable(const std::vector<GridResult>& rows, HeadKind head) {
  std::vector<std::vector<std::string>> body;
  std::string failures;
  for (const GridResult& r : rows) {
    std::vector<std::string> row = {std::to_string(r.experiment_id)};
    if (r.failed) {
      row.insert(row.end(), {"-", std::to_string(r.num_labels), "-", "-"});
      failures += fmt::format("experiment {} failed: {}\n", r.experiment_id, r.error);
    } else {
      row.insert(row.end(), {std::to_string(r.best_epoch), std::to_string(r.num_labels),
                             FormatMetric(r.test_accuracy), FormatMetric(r.test_qwk)});
    }
    if (head == HeadKind::kToken) {
      row.push_back(std::to_string(r.stride));
      row.push_back(std::to_string(r.max_len));
    }
    row.push_back(std::to_string(r.batch_size));
    row.push_back(fmt::format("{}", r.lr));
    body.push_back(std::move(row));
  }
  return FormatTable(GridColumns(head), body) + failures;
}

std::string GridResultJson(const GridResult& r) {
  nlohmann::json j{{"experiment_id", r.experiment_id},
                   {"head", std::string(HeadKindName(r.head))},
                   {"epoch", r.best_epoch},
                   {"max_epochs", r.max_epochs},
                   {"num_label", r.num_labels},
                   {"test_acc", r.test_accuracy},
                   {"test_qwk", r.test_qwk},
                   {"batch_size", r.batch_size},
                   {"lr", r.lr},
                   {"failed", r.failed}};
  if (r.head == HeadKind::kToken) {
    j["stride"] = r.stride;
    j["max_token"] = r.max_len;
  }
  if (r.failed) j["error"] = r.error;
  return j.dump();
}

std::string FormatHistory(const std::vector<EpochRecord>& history) {
  std::string out = "epoch\ttrain_loss\ttest_acc\ttest_qwk\ttest_smd\n";
  for (const EpochRecord& r : history) {
    out += fmt::format("{}\t{:.6f}\t{:.6f}\t{:.6f}\t{}\n", r.epoch, r.train_loss,
                       r.test_accuracy, r.test_qwk,
                       r.test_smd ? fmt::format("{:.6f}", *r.test_smd) : "nan");
  }
  return out;
}

std::string PredictionJson(const TextPrediction& p) {
  nlohmann::json j{{"example_id", p.example_id},
                   {"label", p.label},
                   {"num_chunks", p.num_chunks},
                   {"num_tokens_used", p.num_tokens_used}};
  j["token_label_mean"] =
      p.token_label_mean ? nlohmann::json(*p.token_label_mean) : nlohmann::json(nullptr);
  return j.dump();
}

std::string HeadDisplayName(HeadKind head) {
  return head == HeadKind::kToken ? "Token Classifier" : "Sequence Classifier";
}

}  // namespace tokcls
