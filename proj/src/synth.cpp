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

#include "stdt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "stdt/error.hpp"
#include "stdt/ingest.hpp"
#include "stdt/rng.hpp"

namespace stdt {
namespace {

enum StreamTag : std::uint64_t { kTexture = 1, kRegion = 2, kJitter = 3, kBlend = 4 };

struct Wave {
  double fx = 0.0, fy = 0.0, phase = 0.0, amp = 0.0;
  double weight[3] = {1.0, 1.0, 1.0};
};

struct Texture {
  std::vector<Wave> waves;
  double vx = 0.0, vy = 0.0;
  std::uint64_t noise_seed = 0;
  double noise_weight[3] = {1.0, 1.0, 1.0};
  double bright_phase = 0.0;
};

Texture make_texture(std::uint64_t seed, const SynthConfig& cfg) {
  Rng rng = make_rng(seed, {kTexture});
  Texture tex;
  for (int k = 0; k < cfg.components; ++k) {
    Wave w;
    const double wavelength =
        cfg.min_wavelength + (cfg.max_wavelength - cfg.min_wavelength) * uniform01(rng);
    const double angle = 2.0 * std::numbers::pi * uniform01(rng);
    w.fx = std::cos(angle) / wavelength;
    w.fy = std::sin(angle) / wavelength;
    w.phase = 2.0 * std::numbers::pi * uniform01(rng);
    w.amp = cfg.contrast / cfg.components;
    for (double& c : w.weight) c = 0.5 + 0.5 * uniform01(rng);
    tex.waves.push_back(w);
  }
  const double angle = 2.0 * std::numbers::pi * uniform01(rng);
  const double speed = cfg.drift_speed * (0.5 + 0.5 * uniform01(rng));
  tex.vx = speed * std::cos(angle);
  tex.vy = speed * std::sin(angle);
  tex.noise_seed = rng();
  for (double& c : tex.noise_weight) c = 0.5 + 0.5 * uniform01(rng);
  tex.bright_phase = 2.0 * std::numbers::pi * uniform01(rng);
  return tex;
}

double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x9E3779B1ULL +
                                                       static_cast<std::uint64_t>(iy) * 0x85EBCA77ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double x, double y, double cell) {
  const double gx = x / cell;
  const double gy = y / cell;
  const auto ix = static_cast<std::int64_t>(std::floor(gx));
  const auto iy = static_cast<std::int64_t>(std::floor(gy));
  const double tx = smoothstep(gx - static_cast<double>(ix));
  const double ty = smoothstep(gy - static_cast<double>(iy));
  const double a = lattice(seed, ix, iy);
  const double b = lattice(seed, ix + 1, iy);
  const double c = lattice(seed, ix, iy + 1);
  const double d = lattice(seed, ix + 1, iy + 1);
  const double top = a + (b - a) * tx;
  const double bottom = c + (d - c) * tx;
  return top + (bottom - top) * ty;
}

// Texture value at pixel center (y, x) of frame t, sampled with an extra
// phase offset (oy, ox) in pixels. Not clamped.
void texture_rgb(const Texture& tex, const SynthConfig& cfg, int t, double y, double x,
                 double oy, double ox, double out[3]) {
  const double px = x - tex.vx * t + ox;
  const double py = y - tex.vy * t + oy;
  const double bright = cfg.brightness_variation *
                        std::sin(2.0 * std::numbers::pi * t / cfg.brightness_period +
                                 tex.bright_phase);
  const double noise = cfg.noise_amplitude * value_noise(tex.noise_seed, px, py, cfg.noise_cell);
  // The layout does not drift, but it moves with the offset. Centered on the
  // face so it is mirror symmetric, like a frontal face.
  const double w = 2.0 * std::numbers::pi / cfg.layout_period;
  const double c = 0.5 * (cfg.face_size - 1);
  const double layout =
      0.5 * cfg.layout_contrast * (std::cos(w * (x + ox - c)) + std::cos(w * (y + oy - c)));
  for (int c = 0; c < 3; ++c) out[c] = 0.5 + bright + layout + noise * tex.noise_weight[c];
  for (const Wave& w : tex.waves) {
    const double s = w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * px + w.fy * py) + w.phase);
    for (int c = 0; c < 3; ++c) out[c] += s * w.weight[c];
  }
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

std::vector<Image> render(std::uint64_t seed, const SynthConfig& cfg, bool fake) {
  const Texture tex = make_texture(seed, cfg);
  const Region region = synth_region(seed, cfg);
  const bool jitter = cfg.generator_tag == "jitterA";
  std::vector<Image> frames;
  frames.reserve(cfg.n_frames);
  for (int t = 0; t < cfg.n_frames; ++t) {
    const int epoch = t / cfg.flicker_period;
    // Per-frame disturbance, drawn from its own stream so real clips never
    // consume these draws.
    double jy = 0.0, jx = 0.0, by = 0.0, bx = 0.0, strength = 0.0;
    if (fake) {
      Rng rng = make_rng(seed, {jitter ? kJitter : kBlend, static_cast<std::uint64_t>(epoch)});
      if (jitter) {
        jy = cfg.amplitude * (2.0 * uniform01(rng) - 1.0);
        jx = cfg.amplitude * (2.0 * uniform01(rng) - 1.0);
      } else {
        const double angle = 2.0 * std::numbers::pi * uniform01(rng);
        const double dist = cfg.amplitude * (0.5 + 0.5 * uniform01(rng));
        by = dist * std::sin(angle);
        bx = dist * std::cos(angle);
        strength = cfg.blend_strength * (0.5 + 0.5 * uniform01(rng));
      }
    }
    Image frame(cfg.face_size, cfg.face_size);
    double base[3], other[3];
    for (int y = 0; y < cfg.face_size; ++y) {
      for (int x = 0; x < cfg.face_size; ++x) {
        const bool inside = fake && region.contains(y, x);
        if (inside && jitter) {
          texture_rgb(tex, cfg, t, y, x, jy, jx, base);
        } else {
          texture_rgb(tex, cfg, t, y, x, 0.0, 0.0, base);
          if (inside) {
            const int d = std::min({y - region.top, region.top + region.height - 1 - y,
                                    x - region.left, region.left + region.width - 1 - x});
            const double lambda = strength * std::max(0.0, 1.0 - d / cfg.seam_width);
            if (lambda > 0.0) {
              texture_rgb(tex, cfg, t, y, x, by, bx, other);
              for (int c = 0; c < 3; ++c) base[c] = (1.0 - lambda) * base[c] + lambda * other[c];
            }
          }
        }
        for (int c = 0; c < 3; ++c) frame.at(y, x, c) = clamp01(base[c]);
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::string clip_name(const std::string& tag, const char* kind, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%s_%05d", kind, index);
  return tag + buf;
}

}  // namespace

void validate_synth_config(const SynthConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidConfig, msg); };
  if (cfg.face_size <= 0 || cfg.n_frames <= 0 || cfg.rows <= 0 || cfg.cols <= 0) {
    fail("synth sizes must be positive");
  }
  if (cfg.face_size % cfg.rows != 0 || cfg.face_size % cfg.cols != 0) {
    throw Error(ErrorKind::kGridMismatch, "synth face_size not divisible by grid");
  }
  if (cfg.region_rows <= 0 || cfg.region_cols <= 0 || cfg.region_rows > cfg.rows ||
      cfg.region_cols > cfg.cols) {
    fail("inconsistent region does not fit in the grid");
  }
  if (cfg.amplitude < 0.0) fail("amplitude must be non-negative");
  if (cfg.blend_strength < 0.0 || cfg.blend_strength > 1.0) fail("blend_strength must be in [0,1]");
  if (cfg.generator_tag != "jitterA" && cfg.generator_tag != "blendB") {
    fail("generator_tag must be jitterA or blendB");
  }
  if (cfg.components <= 0 || cfg.min_wavelength <= 0.0 ||
      cfg.max_wavelength < cfg.min_wavelength || cfg.noise_cell <= 0.0 ||
      cfg.brightness_period <= 0.0 || cfg.flicker_period <= 0 || cfg.seam_width <= 0.0 ||
      cfg.drift_speed < 0.0 || cfg.contrast < 0.0 || cfg.noise_amplitude < 0.0 ||
      cfg.layout_contrast < 0.0 || cfg.layout_period <= 0.0) {
    fail("invalid texture parameters");
  }
}

Region synth_region(std::uint64_t seed, const SynthConfig& cfg) {
  Rng rng = make_rng(seed, {kRegion});
  const int ph = cfg.face_size / cfg.rows;
  const int pw = cfg.face_size / cfg.cols;
  const int r0 = static_cast<int>(uniform_int(rng, 0, cfg.rows - cfg.region_rows));
  const int c0 = static_cast<int>(uniform_int(rng, 0, cfg.cols - cfg.region_cols));
  return {r0 * ph, c0 * pw, cfg.region_rows * ph, cfg.region_cols * pw};
}

FaceSequence generate_real_clip(std::uint64_t seed, const SynthConfig& cfg) {
  validate_synth_config(cfg);
  FaceSequence seq;
  seq.clip_id = "real_" + std::to_string(seed);
  seq.label = 0;
  seq.generator_tag = cfg.generator_tag;
  seq.frames = render(seed, cfg, false);
  return seq;
}

FaceSequence generate_fake_clip(std::uint64_t seed, const SynthConfig& cfg) {
  validate_synth_config(cfg);
  FaceSequence seq;
  seq.clip_id = "fake_" + std::to_string(seed);
  seq.label = 1;
  seq.generator_tag = cfg.generator_tag;
  seq.frames = render(seed, cfg, true);
  return seq;
}

double drift_delta_bound(const SynthConfig& cfg) {
  const double wave_grad = cfg.contrast * 2.0 * std::numbers::pi / cfg.min_wavelength;
  const double noise_grad = cfg.noise_amplitude * 3.0 * std::numbers::sqrt2 / cfg.noise_cell;
  const double bright = cfg.brightness_variation * 2.0 * std::numbers::pi / cfg.brightness_period;
  return cfg.drift_speed * (wave_grad + noise_grad) + bright;
}

CorpusSummary build_corpus(int count_per_class, const SynthConfig& cfg,
                           const std::vector<std::string>& generator_tags, std::uint64_t seed,
                           const std::filesystem::path& out,
                           const std::vector<double>& split_fractions) {
  if (count_per_class <= 0) throw Error(ErrorKind::kEmptyCorpus, "count per class must be > 0");
  validate_synth_config(cfg);
  const auto frames_root = out / "frames";
  std::filesystem::create_directories(frames_root);
  std::ofstream labels(frames_root / "labels.csv", std::ios::binary);
  if (!labels) throw Error(ErrorKind::kIo, "cannot write labels.csv");
  labels << "clip_id,label,generator_tag\n";

  CorpusSummary summary;
  for (const auto& tag : generator_tags) {
    SynthConfig tagged = cfg;
    tagged.generator_tag = tag;
    validate_synth_config(tagged);
    const std::uint64_t tag_seed = derive_seed(seed, {fnv1a(tag)});
    for (int i = 0; i < count_per_class; ++i) {
      const std::uint64_t clip_seed = derive_seed(tag_seed, {static_cast<std::uint64_t>(i)});
      for (int fake = 0; fake < 2; ++fake) {
        const std::string id = clip_name(tag, fake ? "fake" : "real", i);
        const auto frames = render(clip_seed, tagged, fake == 1);
        const auto dir = frames_root / id;
        std::filesystem::create_directories(dir);
        for (std::size_t t = 0; t < frames.size(); ++t) {
          write_png(frames[t], dir / frame_filename(static_cast<int>(t)));
        }
        labels << id << ',' << fake << ',' << tag << '\n';
        summary.clip_ids.push_back(id);
      }
    }
  }
  labels.close();

  const auto entries = build_manifest(frames_root, split_fractions, seed);
  summary.manifest = out / "manifest.jsonl";
  write_manifest(summary.manifest, entries);
  return summary;
}

}  // namespace stdt
