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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "stdt/evaluator.hpp"
#include "stdt/image.hpp"
#include "stdt/rng.hpp"
#include "stdt/sampler.hpp"
#include "stdt/synth.hpp"
#include "stdt/vit.hpp"

namespace stdt::testing {

inline Image random_image(int h, int w, Rng& rng) {
  Image img(h, w);
  for (float& v : img.pixels()) v = static_cast<float>(uniform01(rng));
  return img;
}

inline FaceSequence random_sequence(const StdConfig& cfg, Rng& rng, int frames = -1) {
  FaceSequence seq;
  seq.clip_id = "rand";
  const int count = frames < 0 ? cfg.n : frames;
  for (int t = 0; t < count; ++t) seq.frames.push_back(random_image(cfg.face_size, cfg.face_size, rng));
  return seq;
}

// Channels hold (frame, y, x) of each pixel, so a patch can be traced back to
// its source frame and location.
inline FaceSequence coded_sequence(const StdConfig& cfg) {
  FaceSequence seq;
  seq.clip_id = "coded";
  for (int t = 0; t < cfg.n; ++t) {
    Image img(cfg.face_size, cfg.face_size);
    for (int y = 0; y < cfg.face_size; ++y) {
      for (int x = 0; x < cfg.face_size; ++x) {
        img.at(y, x, 0) = static_cast<float>(t);
        img.at(y, x, 1) = static_cast<float>(y);
        img.at(y, x, 2) = static_cast<float>(x);
      }
    }
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

// Checks a full-STD bag against the sampler invariants: every spatial index
// exactly once in ascending order, one contiguous row-major run per source
// frame, source frames forming one contiguous window of (1-alpha)n frames that
// starts at k1 within [1, alpha*n + 1]. Returns an empty string when all hold.
inline std::string bag_violation(const BagOfPatches& bag, const StdConfig& cfg) {
  const int m = cfg.num_patches();
  const int kept = cfg.kept_frames();
  const int block = cfg.block_size();
  if (static_cast<int>(bag.origins.size()) != m || static_cast<int>(bag.patches.size()) != m) {
    return "bag size differs from m";
  }
  for (int j = 0; j < m; ++j) {
    if (bag.origins[j].spatial != j) return "spatial order/coverage broken at " + std::to_string(j);
  }
  if (bag.k1 < 1 || bag.k1 > cfg.n - kept + 1) return "k1 out of range";
  std::vector<std::vector<int>> per_frame(cfg.n);
  for (const auto& o : bag.origins) {
    if (o.frame < bag.k1 - 1 || o.frame >= bag.k1 - 1 + kept) return "frame outside window";
    per_frame[o.frame].push_back(o.spatial);
  }
  for (int f = bag.k1 - 1; f < bag.k1 - 1 + kept; ++f) {
    const auto& s = per_frame[f];
    if (static_cast<int>(s.size()) != block) return "frame block size wrong";
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i] != s[i - 1] + 1) return "frame block not contiguous";
    }
    if (s.front() % block != 0) return "block not aligned to the partition";
  }
  for (const auto& o : bag.origins) {
    if (o.k2 != per_frame[o.frame].front() + 1) return "k2 is not the block start";
    if (o.k2 < 1 || o.k2 > m - block + 1) return "k2 out of range";
  }
  return {};
}

// Upper tail P(X > x) of a chi-square variable with df degrees of freedom,
// via the regularized incomplete gamma function (series below a+1,
// continued fraction above).
inline double chi_square_sf(double x, int df) {
  const double a = df / 2.0;
  const double z = x / 2.0;
  if (z <= 0.0) return 1.0;
  const double log_prefix = a * std::log(z) - z - std::lgamma(a);
  if (z < a + 1.0) {
    double term = 1.0 / a, sum = term;
    for (int k = 1; k < 10000 && std::abs(term) > 1e-16 * std::abs(sum); ++k) {
      term *= z / (a + k);
      sum += term;
    }
    return 1.0 - sum * std::exp(log_prefix);
  }
  double b = z + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(log_prefix) * h;
}

// Pearson statistic of observed counts against equal expected counts.
inline double chi_square_uniform(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts) total += c;
  const double expected = static_cast<double>(total) / counts.size();
  double stat = 0.0;
  for (long c : counts) stat += (c - expected) * (c - expected) / expected;
  return stat;
}

inline StdConfig toy_std() {
  StdConfig cfg;
  cfg.n = 8;
  cfg.alpha = 0.5;
  cfg.beta = 0.75;
  cfg.rows = 4;
  cfg.cols = 4;
  cfg.face_size = 32;
  return cfg;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("stdt_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Every tensor drawn from N(0, s^2) around its natural center, so activations
// and gradients are far from zero and the check is not vacuous.
inline VitParams noisy_params(const VitConfig& cfg, std::uint64_t seed, double s = 0.3) {
  VitParams p = make_params(cfg);
  Rng rng = make_rng(seed);
  for (auto& t : tensors(p)) {
    const bool gain = t.name.find("norm") != std::string::npos && t.name.ends_with("weight");
    for (double& v : t.data) v = (gain ? 1.0 : 0.0) + s * standard_normal(rng);
  }
  return p;
}

inline BagOfPatches toy_bag(std::uint64_t seed) {
  const StdConfig cfg = toy_std();
  Rng rng = make_rng(seed);
  const FaceSequence seq = random_sequence(cfg, rng);
  return sample_bag(seq, cfg, rng);
}

struct GradientCheck {
  double max_rel = 0.0;
  std::string worst;
  double loss_gap = 0.0;  // backward's loss vs. a plain forward
  bool names_match = true;
  int tensors_checked = 0;
};

// Central differences with h = 1e-5 over every scalar of every tensor.
// Relative error is |a - n| / max(|a|, |n|), with both sides below 1e-7
// treated as agreeing (their difference is at the finite-difference noise floor).
inline GradientCheck gradient_check(const VitConfig& cfg, Mode mode, std::uint64_t seed, int label) {
  const BagOfPatches bag = toy_bag(seed);
  VitParams p = noisy_params(cfg, seed + 1);
  const Rng rng = make_rng(seed + 2);
  auto loss_at = [&] {
    Rng local = rng;
    return bce_loss(forward(patch_embed(bag, p, cfg), p, cfg, mode, &local), label);
  };
  Rng copy = rng;
  const Gradients g = backward(bag, label, p, cfg, mode, &copy);

  GradientCheck res;
  res.loss_gap = std::abs(g.loss - loss_at());
  const double h = 1e-5;
  auto params = tensors(p);
  const auto grads = tensors(g.grads);
  for (std::size_t t = 0; t < params.size(); ++t) {
    res.names_match = res.names_match && params[t].name == grads[t].name;
    ++res.tensors_checked;
    for (std::size_t i = 0; i < params[t].data.size(); ++i) {
      double& w = params[t].data[i];
      const double saved = w;
      w = saved + h;
      const double up = loss_at();
      w = saved - h;
      const double down = loss_at();
      w = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[t].data[i];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      if (scale < 1e-7) continue;
      const double rel = std::abs(numeric - analytic) / scale;
      if (rel > res.max_rel) {
        res.max_rel = rel;
        res.worst = params[t].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

// In-memory synthetic corpus: pair i lands in train, val or test by i % 10
// (8/1/1).
inline ExperimentData synth_data(int per_class, const SynthConfig& cfg, std::uint64_t seed) {
  ExperimentData d;
  for (int i = 0; i < per_class; ++i) {
    const std::uint64_t s = derive_seed(seed, {fnv1a(cfg.generator_tag), static_cast<std::uint64_t>(i)});
    for (int fake = 0; fake < 2; ++fake) {
      const FaceSequence q = fake ? generate_fake_clip(s, cfg) : generate_real_clip(s, cfg);
      ClipData c;
      c.entry.clip_id = cfg.generator_tag + (fake ? "_fake_" : "_real_") + std::to_string(i);
      c.entry.label = fake;
      c.entry.generator_tag = cfg.generator_tag;
      c.entry.frame_count = static_cast<int>(q.frames.size());
      c.frames = q.frames;
      const int r = i % 10;
      c.entry.split = r < 8 ? "train" : (r == 8 ? "val" : "test");
      (r < 8 ? d.train : r == 8 ? d.val : d.test).push_back(std::move(c));
    }
  }
  return d;
}

}  // namespace stdt::testing
