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

#ifndef TOKCLS_TESTS_SUPPORT_ORACLES_H_
#define TOKCLS_TESTS_SUPPORT_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tokcls/encoder.h"
#include "tokcls/heads.h"
#include "tokcls/train.h"

namespace tokcls::testing {

// Slides a window forward by (max_len - stride) until it reaches the end.
inline int BruteForceChunkCount(int length, int max_len, int stride) {
  int count = 1;
  for (int start = 0; start + max_len < length; start += max_len - stride) ++count;
  return count;
}

inline double LoopAccuracy(std::span<const int> pred, std::span<const int> gold) {
  int hits = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == gold[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Quadratic kappa as 1 - mean pair weight over matched items divided by the
// mean pair weight over all (a, b) item pairs.
inline double PairwiseQwk(std::span<const int> pred, std::span<const int> gold, int k) {
  const double n = static_cast<double>(pred.size());
  const auto w = [k](int i, int j) {
    return static_cast<double>((i - j) * (i - j)) / static_cast<double>((k - 1) * (k - 1));
  };
  double matched = 0.0;
  for (size_t a = 0; a < pred.size(); ++a) matched += w(pred[a], gold[a]);
  double crossed = 0.0;
  for (size_t a = 0; a < pred.size(); ++a) {
    for (size_t b = 0; b < gold.size(); ++b) crossed += w(pred[a], gold[b]);
  }
  crossed /= n;
  if (crossed == 0.0) return matched == 0.0 ? 1.0 : std::nan("");
  return 1.0 - matched / crossed;
}

// Per-tensor ||analytic - numeric|| / max(||analytic||, ||numeric||) with
// central differences of the mean batch loss.
inline std::map<std::string, double> GradientRelativeErrors(
    const ModelParams<double>& params, HeadKind head,
    const std::vector<TrainingSample>& samples, double step = 1e-5) {
  std::vector<const TrainingSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  ModelParams<double> analytic = params.ZerosLike();
  BatchLossAndGradient<double>(params, head, batch, &analytic);

  std::vector<const Matrix<double>*> grads;
  analytic.ForEachTensor(
      [&](const std::string&, const Matrix<double>& m) { grads.push_back(&m); });

  ModelParams<double> probe = params;
  std::map<std::string, double> errors;
  size_t index = 0;
  probe.ForEachTensor([&](const std::string& name, Matrix<double>& m) {
    const Matrix<double>& g = *grads[index++];
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double original = m.data()[i];
      m.data()[i] = original + step;
      const double up = BatchLossAndGradient<double>(probe, head, batch, nullptr);
      m.data()[i] = original - step;
      const double down = BatchLossAndGradient<double>(probe, head, batch, nullptr);
      m.data()[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double a = g.data()[i];
      diff += (a - numeric) * (a - numeric);
      norm_a += a * a;
      norm_n += numeric * numeric;
    }
    const double scale = std::max(std::sqrt(norm_a), std::sqrt(norm_n));
    errors[name] = scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
  });
  return errors;
}

}  // namespace tokcls::testing

#endif  // TOKCLS_TESTS_SUPPORT_ORACLES_H_
