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

// Text tables and line-delimited JSON records for everything the CLI emits.

#ifndef TOKCLS_REPORT_H_
#define TOKCLS_REPORT_H_

#include <string>
#include <utility>
#include <vector>

#include "tokcls/corpus.h"
#include "tokcls/heads.h"
#include "tokcls/metrics.h"
#include "tokcls/train.h"

namespace tokcls {

// Left-aligned first column, right-aligned numeric columns, '-' rule under
// the header.
std::string FormatTable(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows);

// 3 decimal places.
std::string FormatMetric(double value);

// Columns: Set, Samples, Tokens, Token > threshold, Average Label, then one
// "% Label k" column per class.
std::string FormatStatsTable(
    const std::vector<std::pair<std::string, DataStats>>& rows);

// Columns: Model, val acc, val qwk, val smd (absolute value).
std::string FormatEvalTable(
    const std::vector<std::pair<std::string, EvalReport>>& rows);
std::string FormatConfusion(const ConfusionMatrix& confusion);
std::string EvalReportJson(const std::string& model, const EvalReport& report);

std::vector<std::string> GridColumns(HeadKind head);
// Token head rows carry stride and max token columns; sequence rows do not.
std::string FormatGridTable(const std::vector<GridResult>& rows, HeadKind head);
std::string GridResultJson(const GridResult& row);

// Tab-separated: epoch, train_loss, test_acc, test_qwk, test_smd.
std::string FormatHistory(const std::vector<EpochRecord>& history);

std::string PredictionJson(const TextPrediction& prediction);

std::string HeadDisplayName(HeadKind head);

}  // namespace tokcls

#endif  // TOKCLS_REPORT_H_
