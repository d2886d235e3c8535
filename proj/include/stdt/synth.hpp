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
#include <string>
#include <vector>

#include "stdt/image.hpp"
#include "stdt/sampler.hpp"

namespace stdt {

// Procedural face-video stand-in: a drifting sum of sinusoids plus value
// noise, with an optional patch-aligned region that is made temporally
// inconsistent.
struct SynthConfig {
  int face_size = 32;
  int n_frames = 12;
  int rows = 4;  // grid the inconsistent region snaps to
  int cols = 4;

  // Texture.
  int components = 3;
  double min_wavelength = 10.0;  // pixels
  double max_wavelength = 28.0;
  double contrast = 0.3;         // total sinusoid amplitude
  double noise_amplitude = 0.04;
  double noise_cell = 6.0;       // value-noise lattice spacing, pixels
  double drift_speed = 0.5;      // max pixels per frame
  double brightness_variation = 0.02;
  double brightness_period = 16.0;  // frames
  // Static layout shared by every clip (an aligned face has its features in
  // fixed places): two orthogonal gratings of this period and total contrast.
  double layout_contrast = 0.2;
  double layout_period = 8.0;  // pixels

  // Inconsistency.
  std::string generator_tag = "jitterA";  // jitterA | blendB
  int region_rows = 2;  // region size in grid patches
  int region_cols = 2;
  // Max offset in pixels: the per-frame phase jitter (jitterA) or the shift of
  // the texture blended into the seam (blendB).
  double amplitude = 4.0;
  double blend_strength = 0.8;  // blendB peak blend weight, in [0, 1]
  int flicker_period = 1;  // frames between re-draws of the per-frame disturbance
  double seam_width = 3.0;  // blendB band width inside the region, pixels

  bool operator==(const SynthConfig&) const = default;
};

void validate_synth_config(const SynthConfig& cfg);

// Patch-aligned rectangle in pixels.
struct Region {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool contains(int y, int x) const {
    return y >= top && y < top + height && x >= left && x < left + width;
  }
};

// Region placement depends only on (seed, cfg grid), not on the generator tag.
Region synth_region(std::uint64_t seed, const SynthConfig& cfg);

FaceSequence generate_real_clip(std::uint64_t seed, const SynthConfig& cfg);

// Same texture as generate_real_clip(seed, cfg) outside synth_region(seed, cfg).
FaceSequence generate_fake_clip(std::uint64_t seed, const SynthConfig& cfg);

// Upper bound on |frame[t+1] - frame[t]| at any pixel of a real clip, from the
// drift speed and the texture's gradient bound.
double drift_delta_bound(const SynthConfig& cfg);

struct CorpusSummary {
  std::vector<std::string> clip_ids;
  std::filesystem::path manifest;
};

// Writes <out>/frames/<clip_id>/<%06d>.png, <out>/frames/labels.csv and
// <out>/manifest.jsonl. One real and one fake clip per index share a texture
// seed; every generator tag gets its own seed stream.
CorpusSummary build_corpus(int count_per_class, const SynthConfig& cfg,
                           const std::vector<std::string>& generator_tags, std::uint64_t seed,
                           const std::filesystem::path& out,
                           const std::vector<double>& split_fractions = {0.8, 0.1, 0.1});

}  // namespace stdt
