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

#pragma once

#include <limits>
#include <span>
#include <vector>

#include "stdt/rng.hpp"

namespace stdt {

// Positive class is fake (label 1) throughout.

// Mann-Whitney AUC from average ranks: P(fake > real) + P(tie)/2.
// Throws SingleClass when either class is absent.
double auc(std::span<const double> scores, std::span<const int> labels);

struct ClassificationMetrics {
  double acc = 0.0;
  double rec = 0.0;
  double pre = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // no positive predictions; pre reported as 0
  int tp = 0, fp = 0, tn = 0, fn = 0;
};

// A clip is predicted fake when score > threshold. Throws EmptyInput.
ClassificationMetrics classify(std::span<const double> scores, std::span<const int> labels,
                               double threshold = 0.5);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
};

// Starts at (0,0) with an infinite threshold, then one point per distinct score
// (predict fake when score >= threshold) in decreasing order, ending at (1,1).
std::vector<RocPoint> roc(std::span<const double> scores, std::span<const int> labels);

double trapezoid_area(const std::vector<RocPoint>& points);

struct NullStats {
  double mean = 0.0;
  double stddev = 0.0;
  int permutations = 0;
};

// AUC distribution under random relabeling of the same scores.
NullStats permutation_null(std::span<const double> scores, std::span<const int> labels,
                           int permutations, Rng& rng);

}  // namespace stdt
