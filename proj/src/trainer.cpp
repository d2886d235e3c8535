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

#include "stdt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

#include "stdt/error.hpp"
#include "stdt/metrics.hpp"

namespace stdt {
namespace {

struct Visit {
  std::size_t clip = 0;
  int copy = 0;
};

void add_into(VitParams& dst, const VitParams& src) {
  auto d = tensors(dst);
  const auto s = tensors(src);
  for (std::size_t t = 0; t < d.size(); ++t) {
    for (std::size_t i = 0; i < d[t].data.size(); ++i) d[t].data[i] += s[t].data[i];
  }
}

void scale(VitParams& p, double factor) {
  for (auto& t : tensors(p)) {
    for (double& v : t.data) v *= factor;
  }
}

// Scores the validation clips in eval mode. The bag draws do not depend on
// the epoch, so successive epochs are compared on identical bags.
double validation_auc(const std::vector<ClipData>& clips, const VitParams& params,
                      const SamplingPlan& plan, const VitConfig& vit_cfg, const TrainConfig& cfg) {
  if (clips.empty()) return -1.0;
  std::vector<double> scores;
  std::vector<int> labels;
  bool seen[2] = {false, false};
  for (const auto& clip : clips) {
    Rng rng = make_rng(cfg.seed, {kTagVal, fnv1a(clip.entry.clip_id)});
    double sum = 0.0;
    for (int b = 0; b < cfg.val_bags; ++b) {
      const FaceSequence seq = clip_window(clip, plan.base.n, rng);
      const BagOfPatches bag = sample_patches(seq, plan, rng);
      sum += sigmoid(forward(patch_embed(bag, params, vit_cfg), params, vit_cfg));
    }
    scores.push_back(sum / cfg.val_bags);
    labels.push_back(clip.entry.label);
    seen[clip.entry.label != 0] = true;
  }
  if (!seen[0] || !seen[1]) return -1.0;
  return auc(scores, labels);
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidConfig, msg); };
  if (!(cfg.max_lr >= 0.0)) fail("max_lr must be >= 0");
  if (!(cfg.warmup_fraction > 0.0 && cfg.warmup_fraction < 1.0)) fail("warmup_fraction must be in (0,1)");
  if (!(cfg.final_divisor >= 1.0)) fail("final_divisor must be >= 1");
  if (!(cfg.weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) fail("momentum must be in [0,1)");
  if (cfg.epochs < 1) fail("epochs must be >= 1");
  if (cfg.batch_size < 1) fail("batch_size must be >= 1");
  if (cfg.bags_per_video_per_epoch < 1) fail("bags_per_video_per_epoch must be >= 1");
  if (cfg.val_bags < 1) fail("val_bags must be >= 1");
  if (cfg.jobs < 1) fail("jobs must be >= 1");
}

int onecycle_peak(int total_steps, const TrainConfig& cfg) {
  return static_cast<int>(std::lround(cfg.warmup_fraction * (total_steps - 1)));
}

double onecycle_lr(int step, int total_steps, const TrainConfig& cfg) {
  if (total_steps < 1 || step < 0 || step >= total_steps) {
    throw Error(ErrorKind::kInvalidConfig, "step outside [0, total_steps)");
  }
  const double pi = std::numbers::pi;
  const int peak = onecycle_peak(total_steps, cfg);
  if (step <= peak) {
    if (peak == 0) return cfg.max_lr;
    const double t = static_cast<double>(step) / peak;
    return cfg.max_lr * (1.0 - std::cos(pi * t)) / 2.0;
  }
  const double lo = cfg.max_lr / cfg.final_divisor;
  const double t = static_cast<double>(step - peak) / (total_steps - 1 - peak);
  return lo + (cfg.max_lr - lo) * (1.0 + std::cos(pi * t)) / 2.0;
}

void sgd_step(VitParams& params, VitParams& velocity, const VitParams& grads, double lr,
              const TrainConfig& cfg) {
  auto p = tensors(params);
  auto v = tensors(velocity);
  const auto g = tensors(grads);
  const double wd = cfg.weight_decay;
  const double mu = cfg.momentum;
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].data.size(); ++i) {
      double& w = p[t].data[i];
      double grad = g[t].data[i];
      if (!cfg.decoupled_weight_decay && wd != 0.0) grad += wd * w;
      double& vel = v[t].data[i];
      vel = mu * vel + grad;
      double next = w - lr * vel;
      if (cfg.decoupled_weight_decay && wd != 0.0) next -= lr * wd * w;
      w = next;
    }
  }
}

int steps_per_epoch(std::size_t clip_count, const TrainConfig& cfg) {
  const std::size_t visits = clip_count * static_cast<std::size_t>(cfg.bags_per_video_per_epoch);
  return static_cast<int>((visits + cfg.batch_size - 1) / cfg.batch_size);
}

FaceSequence clip_window(const ClipData& clip, int n, Rng& rng) {
  FaceSequence seq{clip.entry.clip_id, {}, clip.entry.label, clip.entry.generator_tag};
  if (static_cast<int>(clip.frames.size()) == n) {
    seq.frames = clip.frames;
  } else {
    seq.frames = window_frames(clip.frames, n, rng);
  }
  return seq;
}

TrainResult train(const std::vector<ClipData>& train_clips, const std::vector<ClipData>& val_clips,
                  const SamplingPlan& plan, const VitConfig& vit_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  validate_train_config(cfg);
  validate_vit_config(vit_cfg);
  validate_config(plan.base);
  if (train_clips.empty()) throw Error(ErrorKind::kEmptyCorpus, "train split is empty");
  if (vit_cfg.num_patches != plan.base.num_patches() ||
      vit_cfg.patch_pixels != plan.base.patch_height() ||
      plan.base.patch_height() != plan.base.patch_width()) {
    throw Error(ErrorKind::kShapeMismatch, "ViT geometry does not match the sampling grid");
  }

  TrainResult result;
  VitParams params = init_params(vit_cfg, derive_seed(cfg.seed, {kTagInit}));
  VitParams velocity = zeros_like(params);
  const int per_epoch = steps_per_epoch(train_clips.size(), cfg);
  const int total = per_epoch * cfg.epochs;
  const int jobs = std::max(1, cfg.jobs);

  std::vector<Visit> visits;
  for (std::size_t c = 0; c < train_clips.size(); ++c) {
    for (int k = 0; k < cfg.bags_per_video_per_epoch; ++k) visits.push_back({c, k});
  }

  int step = 0;
  bool have_best = false;
  for (int epoch = 0; epoch < cfg.epochs && !result.aborted; ++epoch) {
    std::vector<Visit> order = visits;
    Rng shuffle_rng = make_rng(cfg.seed, {kTagShuffle, static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(shuffle_rng, 0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    int epoch_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::size_t count = stop - start;
      std::vector<Gradients> slots(count);
      std::vector<std::string> faults(count);
      auto work = [&](std::size_t i) {
        const Visit& v = order[start + i];
        const ClipData& clip = train_clips[v.clip];
        const std::uint64_t id = fnv1a(clip.entry.clip_id);
        const auto e = static_cast<std::uint64_t>(epoch);
        const auto k = static_cast<std::uint64_t>(v.copy);
        Rng bag_rng = make_rng(cfg.seed, {kTagBag, e, id, k});
        Rng drop_rng = make_rng(cfg.seed, {kTagDropout, e, id, k});
        const FaceSequence seq = clip_window(clip, plan.base.n, bag_rng);
        const BagOfPatches bag = sample_patches(seq, plan, bag_rng);
        try {
          slots[i] = backward(bag, clip.entry.label, params, vit_cfg, Mode::kTrain, &drop_rng);
        } catch (const Error& err) {
          if (err.kind() != ErrorKind::kNumericalFault) throw;
          faults[i] = err.what();
        }
      };
      if (jobs == 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
      } else {
        std::vector<std::thread> pool;
        const std::size_t workers = std::min<std::size_t>(jobs, count);
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            try {
              for (std::size_t i = w; i < count; i += workers) work(i);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors) {
          if (e) std::rethrow_exception(e);
        }
      }

      if (const auto bad = std::find_if(faults.begin(), faults.end(),
                                        [](const std::string& f) { return !f.empty(); });
          bad != faults.end()) {
        result.aborted = true;
        result.fault = *bad + " at step " + std::to_string(step);
        break;
      }

      // Reduce in slot order so the sum does not depend on thread timing.
      VitParams grad = std::move(slots[0].grads);
      double loss = slots[0].loss;
      for (std::size_t i = 1; i < count; ++i) {
        add_into(grad, slots[i].grads);
        loss += slots[i].loss;
      }
      scale(grad, 1.0 / static_cast<double>(count));
      loss /= static_cast<double>(count);

      const double lr = onecycle_lr(step, total, cfg);
      if (!std::isfinite(loss) || !all_finite(grad)) {
        std::ostringstream msg;
        msg << "non-finite loss or gradient at step " << step;
        result.aborted = true;
        result.fault = msg.str();
        break;
      }
      VitParams next = params;
      VitParams next_velocity = velocity;
      sgd_step(next, next_velocity, grad, lr, cfg);
      if (!all_finite(next)) {
        std::ostringstream msg;
        msg << "non-finite parameters after step " << step;
        result.aborted = true;
        result.fault = msg.str();
        break;
      }
      params = std::move(next);
      velocity = std::move(next_velocity);
      result.trace.push_back({step, epoch, loss, lr});
      epoch_loss += loss;
      ++epoch_steps;
    }
    if (result.aborted) break;

    EpochRow row{epoch, epoch_steps ? epoch_loss / epoch_steps : 0.0,
                 validation_auc(val_clips, params, plan, vit_cfg, cfg)};
    result.epochs.push_back(row);
    if (row.val_auc >= 0.0 && (!have_best || row.val_auc >= result.best_val_auc)) {
      have_best = true;
      result.best = params;
      result.best_epoch = epoch;
      result.best_val_auc = row.val_auc;
    }
    if (on_epoch && !on_epoch(row)) break;
  }

  result.last = params;
  if (!have_best) {
    result.best = params;
    result.best_epoch = result.epochs.empty() ? -1 : result.epochs.back().epoch;
  }
  return result;
}

}  // namespace stdt
