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

#include <filesystem>
#include <string>
#include <vector>

#include "stdt/image.hpp"
#include "stdt/rng.hpp"

namespace stdt {

// Sampling hyperparameters of spatiotemporal dropout.
//
// A configuration is usable only when the kept frame count (1-alpha)*n and
// the per-frame block size (1-beta)*m are positive integers whose product is
// exactly m, so one bag tiles every grid position once.
struct StdConfig {
  int n = 24;
  double alpha = 0.25;
  double beta = 17.0 / 18.0;
  int rows = 6;
  int cols = 6;
  int face_size = 384;

  int num_patches() const { return rows * cols; }
  int patch_height() const { return face_size / rows; }
  int patch_width() const { return face_size / cols; }
  // Rounded counts; meaningful once validate_config has accepted the config.
  int kept_frames() const;
  int block_size() const;

  bool operator==(const StdConfig&) const = default;
};

// Returns cfg unchanged or throws Error with kind GridMismatch,
// NonIntegralDrop or CoverageViolation.
StdConfig validate_config(const StdConfig& cfg);

// One clip of aligned faces.
struct FaceSequence {
  std::string clip_id;
  std::vector<Image> frames;
  int label = 0;
  std::string generator_tag;
};

// k1 is the 1-based start index drawn from U{1, alpha*n + 1}; `frames` holds
// the kept frames as 0-based indices into the sequence.
struct TemporalWindow {
  int k1 = 1;
  std::vector<int> frames;
};

// One kept frame and the contiguous run of grid positions it contributes.
// `frame` and `block` are 0-based; k2 is the 1-based block start.
struct FrameBlock {
  int frame = 0;
  int k2 = 1;
  std::vector<int> block;
};

struct BlockAssignment {
  std::vector<FrameBlock> entries;
};

struct PatchOrigin {
  int frame = 0;    // 0-based index into the source sequence
  int spatial = 0;  // 0-based row-major grid position
  int k2 = 1;

  bool operator==(const PatchOrigin&) const = default;
};

// A sampled instance: patches sorted by grid position, each tagged with the
// frame it was cut from.
struct BagOfPatches {
  std::vector<Image> patches;
  std::vector<PatchOrigin> origins;
  int label = 0;
  int k1 = 1;

  std::size_t size() const { return patches.size(); }
};

TemporalWindow temporal_dropout(const FaceSequence& seq, const StdConfig& cfg, Rng& rng);

// Row-major tiling of a face into rows*cols patches.
std::vector<Image> grid_crop(const Image& face, const StdConfig& cfg);

// Inverse of grid_crop; patches must be in row-major grid order.
Image reassemble(const std::vector<Image>& patches, const StdConfig& cfg);

BlockAssignment spatial_dropout_assignment(const TemporalWindow& window,
                                           const StdConfig& cfg, Rng& rng);

BagOfPatches assemble_bag(const FaceSequence& seq, const TemporalWindow& window,
                          const BlockAssignment& assignment, const StdConfig& cfg);

// temporal_dropout -> spatial_dropout_assignment -> assemble_bag, all drawing
// from the same engine in that order.
BagOfPatches sample_bag(const FaceSequence& seq, const StdConfig& cfg, Rng& rng);

// Dropout variants compared in the ablation study.
enum class DropoutVariant {
  kNone,            // all n frames, every patch of each
  kSpatial,         // all n frames, one disjoint block per frame
  kTemporal,        // (1-alpha)n frames, every patch of each
  kSpatiotemporal,  // full STD
};

std::string variant_name(DropoutVariant variant);
DropoutVariant parse_variant(const std::string& name);

// Frame/patch counts a variant implies for a base config.
struct SamplingPlan {
  StdConfig base;
  int kept_frames = 0;
  int patches_per_frame = 0;

  int tokens() const { return kept_frames * patches_per_frame; }
};

// Throws CoverageViolation for the spatial variant when m is not divisible by n.
SamplingPlan make_plan(const StdConfig& cfg, DropoutVariant variant);

BagOfPatches sample_patches(const FaceSequence& seq, const SamplingPlan& plan, Rng& rng);

// Writes the bag as a tiled PNG mosaic plus `<png>.txt`, one line per patch:
// "spatial_index source_frame k1 k2" (all 1-based).
void dump_bag(const BagOfPatches& bag, const StdConfig& cfg,
              const std::filesystem::path& png_path);

}  // namespace stdt
