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
#include <functional>
#include <string>
#include <vector>

#include "stdt/ingest.hpp"
#include "stdt/sampler.hpp"
#include "stdt/vit.hpp"

namespace stdt {

struct TrainConfig {
  double max_lr = 1e-3;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  int epochs = 10;
  int batch_size = 8;
  int bags_per_video_per_epoch = 1;
  std::uint64_t seed = 0;
  double warmup_fraction = 0.3;
  double final_divisor = 1e4;
  bool decoupled_weight_decay = true;
  int val_bags = 1;  // bags per clip when scoring the validation split
  int jobs = 1;      // worker threads for per-bag gradients

  bool operator==(const TrainConfig&) const = default;
};

void validate_train_config(const TrainConfig& cfg);

// Cosine ramp from 0 to max_lr over the warmup fraction of the run, then
// cosine decay to max_lr / final_divisor at the last step.
double onecycle_lr(int step, int total_steps, const TrainConfig& cfg);

// Step index where onecycle_lr peaks.
int onecycle_peak(int total_steps, const TrainConfig& cfg);

// One SGD update in place. With decoupled decay the decay term is applied to
// the weights directly; otherwise weight_decay * param is added to the
// gradient before momentum.
void sgd_step(VitParams& params, VitParams& velocity, const VitParams& grads, double lr,
              const TrainConfig& cfg);

struct TraceRow {
  int step = 0;
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct EpochRow {
  int epoch = 0;
  double mean_loss = 0.0;
  double val_auc = -1.0;  // -1 when the validation split cannot be scored
};

struct TrainResult {
  VitParams best;  // best validation AUC, or final params without validation
  VitParams last;  // params after the last successful step
  std::vector<TraceRow> trace;
  std::vector<EpochRow> epochs;
  int best_epoch = -1;
  double best_val_auc = -1.0;
  bool aborted = false;
  std::string fault;
};

// Per-epoch hook; returning false stops training early.
using EpochCallback = std::function<bool(const EpochRow&)>;

// Each epoch visits the training clips in a seeded shuffle; every visit
// windows n frames and draws a fresh bag from its own rng substream. A
// non-finite loss or parameter aborts the run and returns the last good
// parameters with aborted = true.
TrainResult train(const std::vector<ClipData>& train_clips, const std::vector<ClipData>& val_clips,
                  const SamplingPlan& plan, const VitConfig& vit_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

int steps_per_epoch(std::size_t clip_count, const TrainConfig& cfg);

// A uniformly placed n-frame window of the clip (the whole clip when it has
// exactly n frames). TooShort when it has fewer.
FaceSequence clip_window(const ClipData& clip, int n, Rng& rng);

// Substream tags shared by the trainer and evaluator.
enum RngTag : std::uint64_t {
  kTagInit = 11,
  kTagShuffle = 12,
  kTagBag = 13,
  kTagDropout = 14,
  kTagVal = 15,
  kTagEval = 16,
  kTagPerturb = 17,
  kTagEmbed = 18,
  kTagNull = 19,
};

}  // namespace stdt
