// Copyright 2026 The STDT Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stdt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stdt/error.hpp"

namespace stdt {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty()) throw Error(ErrorKind::kEmptyInput, "no scores");
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::kShapeMismatch, "scores and labels differ in length");
  }
}

void check_both_classes(std::span<const int> labels) {
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) {
    throw Error(ErrorKind::kSingleClass, "AUC needs both real and fake clips");
  }
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  check_both_classes(labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(n - positives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

ClassificationMetrics classify(std::span<const double> scores, std::span<const int> labels,
                               double threshold) {
  check_inputs(scores, labels);
  ClassificationMetrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++m.tp;
    if (predicted && !actual) ++m.fp;
    if (!predicted && actual) ++m.fn;
    if (!predicted && !actual) ++m.tn;
  }
  const double total = static_cast<double>(scores.size());
  m.acc = (m.tp + m.tn) / total;
  m.rec = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
  m.precision_undefined = (m.tp + m.fp) == 0;
  m.pre = m.precision_undefined ? 0.0 : static_cast<double>(m.tp) / (m.tp + m.fp);
  m.f1 = (m.pre + m.rec) > 0.0 ? 2.0 * m.pre * m.rec / (m.pre + m.rec) : 0.0;
  return m;
}

std::vector<RocPoint> roc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  check_both_classes(labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double np = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double nn = static_cast<double>(n) - np;
  std::vector<RocPoint> points{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    const double threshold = scores[order[i]];
    while (i < n && scores[order[i]] == threshold) {
      if (labels[order[i]] == 1) ++tp; else ++fp;
      ++i;
    }
    points.push_back({fp / nn, tp / np, threshold});
  }
  return points;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
  }
  return area;
}

NullStats permutation_null(std::span<const double> scores, std::span<const int> labels,
                           int permutations, Rng& rng) {
  check_inputs(scores, labels);
  check_both_classes(labels);
  std::vector<int> shuffled(labels.begin(), labels.end());
  std::vector<double> values;
  values.reserve(permutations);
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(uniform_int(rng, 0, i - 1))]);
    }
    values.push_back(auc(scores, shuffled));
  }
  NullStats stats;
  stats.permutations = permutations;
  if (values.empty()) return stats;
  stats.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
  stats.stddev = values.size() > 1 ? std::sqrt(ss / (values.size() - 1)) : 0.0;
  return stats;
}

}  // namespace stdt
