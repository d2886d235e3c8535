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

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "stdt/ingest.hpp"
#include "stdt/metrics.hpp"
#include "stdt/perturb.hpp"
#include "stdt/sampler.hpp"
#include "stdt/trainer.hpp"
#include "stdt/vit.hpp"

namespace stdt {

// Mean of sigmoid(logit) over `bags` independently drawn bags. Sequences
// longer than the plan's n are windowed first with the same rng.
double predict(const FaceSequence& seq, const VitParams& params, const VitConfig& vit_cfg,
               const SamplingPlan& plan, int bags, Rng& rng);

struct ClipScore {
  std::string clip_id;
  double score = 0.0;
  int label = 0;
  std::string generator_tag;
};

struct EvalReport {
  std::vector<ClipScore> clips;
  ClassificationMetrics metrics;
  double auc = 0.0;
  std::vector<RocPoint> roc;
  nlohmann::json config;
  std::string config_hash;
  // Compression frames that could not reach the target ratio band.
  int unreachable_compressions = 0;
};

// 16 hex digits of FNV-1a over the compact JSON dump.
std::string config_hash(const nlohmann::json& snapshot);

struct EvalOptions {
  int bags = 1;
  std::uint64_t seed = 0;
  std::vector<Perturbation> perturbations;
  double threshold = 0.5;
};

// Scores every clip (optionally perturbed first). Each clip draws from a
// substream keyed by its id, so results do not depend on clip order.
EvalReport evaluate(const std::vector<ClipData>& clips, const VitParams& params,
                    const VitConfig& vit_cfg, const SamplingPlan& plan,
                    const EvalOptions& options, const nlohmann::json& snapshot = {});

nlohmann::json report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);
// Columns: fpr,tpr,threshold,config_hash.
void write_roc_csv(const EvalReport& report, const std::filesystem::path& path);

// One row per clip: clip_id,label,generator_tag,config_hash,e0..e{D-1}, where
// e is the final-normalized class token of one eval-mode bag.
void export_embeddings(const std::vector<ClipData>& clips, const VitParams& params,
                       const VitConfig& vit_cfg, const SamplingPlan& plan, std::uint64_t seed,
                       const std::filesystem::path& path, const std::string& hash);

struct ExperimentData {
  std::vector<ClipData> train;
  std::vector<ClipData> val;
  std::vector<ClipData> test;
};

ExperimentData split_clips(std::vector<ClipData> clips, const std::string& tag = "");

struct VariantResult {
  DropoutVariant variant = DropoutVariant::kSpatiotemporal;
  int tokens = 0;
  EvalReport report;
};

// Token budget above which the no-dropout variant requires allow_large.
inline constexpr int kMaxNoneTokens = 256;

// Trains and evaluates each variant with identical configs and seeds.
std::vector<VariantResult> run_ablation(const ExperimentData& data, const StdConfig& std_cfg,
                                        const VitConfig& vit_cfg, const TrainConfig& train_cfg,
                                        const std::vector<DropoutVariant>& variants,
                                        const EvalOptions& eval, bool allow_large = false);

// Columns: variant,tokens,acc,auc,rec,pre,f1,config_hash.
void write_ablation_csv(const std::vector<VariantResult>& rows,
                        const std::filesystem::path& path, const std::string& hash);

enum class SweepAxis { kAlpha, kBeta };

SweepAxis parse_axis(const std::string& name);

struct SweepPoint {
  SweepAxis axis = SweepAxis::kAlpha;
  double value = 0.0;  // alpha, or beta' = 1 - beta
  bool feasible = false;
  std::string reason;  // why infeasible, or which parameter was adjusted
  StdConfig config;    // adjusted config when feasible
};

// Holds the grid fixed. Alpha axis: (1-alpha)*n' must be an integer dividing m;
// n' is the base n when possible, otherwise the closest feasible window, and
// beta follows from coverage. Beta axis: beta'*m must be an integer; the kept
// frame count m/(beta'*m) sets alpha at the base n, or n' at the base alpha
// when the window is too short.
std::vector<SweepPoint> plan_rate_sweep(SweepAxis axis, const std::vector<double>& values,
                                        const StdConfig& base);

struct SweepRow {
  SweepPoint point;
  std::optional<EvalReport> report;
};

std::vector<SweepRow> run_rate_sweep(SweepAxis axis, const std::vector<double>& values,
                                     const ExperimentData& data, const StdConfig& base,
                                     const VitConfig& vit_cfg, const TrainConfig& train_cfg,
                                     const EvalOptions& eval);

// Columns: axis,value,feasible,n,alpha,beta,acc,auc,reason,config_hash.
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path,
                     const std::string& hash);

struct CrossEvalResult {
  std::string train_tag;
  std::string test_tag;
  EvalReport report;
  NullStats null;
  bool above_null = false;  // auc > 0.5 + 3 * null.stddev
};

// Trains on the train/val splits of train_tag and tests on the test split of
// test_tag, then compares the AUC against a label-permutation null.
CrossEvalResult run_crosseval(const std::vector<ClipData>& clips, const std::string& train_tag,
                              const std::string& test_tag, const StdConfig& std_cfg,
                              const VitConfig& vit_cfg, const TrainConfig& train_cfg,
                              const EvalOptions& eval, int permutations = 1000);

}  // namespace stdt
