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

#include "stdt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include "stdt/error.hpp"

namespace stdt {
namespace {

// Returns the nearest integer when x is integral up to rounding noise.
bool as_count(double x, int& out) {
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) return false;
  out = static_cast<int>(r);
  return true;
}

void check_grid(const StdConfig& cfg) {
  if (cfg.rows <= 0 || cfg.cols <= 0 || cfg.face_size <= 0 || cfg.n <= 0) {
    throw Error(ErrorKind::kGridMismatch, "n, rows, cols and face_size must be positive");
  }
  if (cfg.face_size % cfg.rows != 0 || cfg.face_size % cfg.cols != 0) {
    std::ostringstream msg;
    msg << "face_size " << cfg.face_size << " is not divisible by the " << cfg.rows << "x"
        << cfg.cols << " grid";
    throw Error(ErrorKind::kGridMismatch, msg.str());
  }
}

int kept_or_throw(const StdConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) {
    throw Error(ErrorKind::kNonIntegralDrop, "temporal dropout rate alpha must lie in [0, 1)");
  }
  int kept = 0;
  if (!as_count((1.0 - cfg.alpha) * cfg.n, kept) || kept <= 0) {
    std::ostringstream msg;
    msg << "(1-alpha)*n = " << (1.0 - cfg.alpha) * cfg.n << " is not a positive integer";
    throw Error(ErrorKind::kNonIntegralDrop, msg.str());
  }
  return kept;
}

int block_or_throw(const StdConfig& cfg) {
  if (!(cfg.beta >= 0.0 && cfg.beta < 1.0)) {
    throw Error(ErrorKind::kNonIntegralDrop, "spatial dropout rate beta must lie in [0, 1)");
  }
  int block = 0;
  if (!as_count((1.0 - cfg.beta) * cfg.num_patches(), block) || block <= 0) {
    std::ostringstream msg;
    msg << "(1-beta)*m = " << (1.0 - cfg.beta) * cfg.num_patches()
        << " is not a positive integer";
    throw Error(ErrorKind::kNonIntegralDrop, msg.str());
  }
  return block;
}

TemporalWindow draw_window(int n, int kept, Rng& rng) {
  TemporalWindow window;
  window.k1 = static_cast<int>(uniform_int(rng, 1, n - kept + 1));
  window.frames.resize(kept);
  std::iota(window.frames.begin(), window.frames.end(), window.k1 - 1);
  return window;
}

// Splits positions 0..m-1 into window.size() runs of `block` positions and
// hands them to the kept frames through a uniformly random bijection.
BlockAssignment draw_blocks(const TemporalWindow& window, int block, Rng& rng) {
  const int kept = static_cast<int>(window.frames.size());
  std::vector<int> perm(kept);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = kept - 1; i > 0; --i) {
    std::swap(perm[i], perm[static_cast<int>(uniform_int(rng, 0, i))]);
  }
  BlockAssignment out;
  out.entries.reserve(kept);
  for (int i = 0; i < kept; ++i) {
    FrameBlock fb;
    fb.frame = window.frames[i];
    const int start = perm[i] * block;
    fb.k2 = start + 1;
    fb.block.resize(block);
    std::iota(fb.block.begin(), fb.block.end(), start);
    out.entries.push_back(std::move(fb));
  }
  return out;
}

BlockAssignment full_blocks(const TemporalWindow& window, int m) {
  BlockAssignment out;
  for (int frame : window.frames) {
    FrameBlock fb;
    fb.frame = frame;
    fb.k2 = 1;
    fb.block.resize(m);
    std::iota(fb.block.begin(), fb.block.end(), 0);
    out.entries.push_back(std::move(fb));
  }
  return out;
}

void check_sequence(const FaceSequence& seq, const StdConfig& cfg) {
  if (static_cast<int>(seq.frames.size()) != cfg.n) {
    std::ostringstream msg;
    msg << "clip " << seq.clip_id << " has " << seq.frames.size() << " frames, expected "
        << cfg.n;
    throw Error(ErrorKind::kShapeMismatch, msg.str());
  }
}

BagOfPatches gather(const FaceSequence& seq, int k1, const BlockAssignment& assignment,
                    const StdConfig& cfg) {
  std::vector<PatchOrigin> origins;
  for (const auto& entry : assignment.entries) {
    for (int spatial : entry.block) origins.push_back({entry.frame, spatial, entry.k2});
  }
  std::sort(origins.begin(), origins.end(), [](const PatchOrigin& a, const PatchOrigin& b) {
    return std::tie(a.spatial, a.frame) < std::tie(b.spatial, b.frame);
  });
  const int ph = cfg.patch_height();
  const int pw = cfg.patch_width();
  BagOfPatches bag;
  bag.label = seq.label;
  bag.k1 = k1;
  bag.patches.reserve(origins.size());
  for (const auto& o : origins) {
    const Image& frame = seq.frames.at(o.frame);
    if (frame.height() != cfg.face_size || frame.width() != cfg.face_size) {
      throw Error(ErrorKind::kShapeMismatch, "frame does not match face_size");
    }
    bag.patches.push_back(crop(frame, (o.spatial / cfg.cols) * ph, (o.spatial % cfg.cols) * pw,
                               ph, pw));
  }
  bag.origins = std::move(origins);
  return bag;
}

}  // namespace

int StdConfig::kept_frames() const {
  return static_cast<int>(std::lround((1.0 - alpha) * n));
}

int StdConfig::block_size() const {
  return static_cast<int>(std::lround((1.0 - beta) * num_patches()));
}

StdConfig validate_config(const StdConfig& cfg) {
  check_grid(cfg);
  const int kept = kept_or_throw(cfg);
  const int block = block_or_throw(cfg);
  const int m = cfg.num_patches();
  if (kept * block != m) {
    std::ostringstream msg;
    msg << "coverage identity ((1-alpha)*n) * ((1-beta)*m) = m violated: " << kept << " * "
        << block << " = " << kept * block << " != " << m;
    throw Error(ErrorKind::kCoverageViolation, msg.str());
  }
  return cfg;
}

TemporalWindow temporal_dropout(const FaceSequence& seq, const StdConfig& cfg, Rng& rng) {
  check_sequence(seq, cfg);
  return draw_window(cfg.n, kept_or_throw(cfg), rng);
}

std::vector<Image> grid_crop(const Image& face, const StdConfig& cfg) {
  check_grid(cfg);
  if (face.height() != cfg.face_size || face.width() != cfg.face_size) {
    throw Error(ErrorKind::kShapeMismatch, "face is not face_size x face_size");
  }
  const int ph = cfg.patch_height();
  const int pw = cfg.patch_width();
  std::vector<Image> patches;
  patches.reserve(cfg.num_patches());
  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) patches.push_back(crop(face, r * ph, c * pw, ph, pw));
  }
  return patches;
}

Image reassemble(const std::vector<Image>& patches, const StdConfig& cfg) {
  if (static_cast<int>(patches.size()) != cfg.num_patches()) {
    throw Error(ErrorKind::kShapeMismatch, "reassemble needs exactly m patches");
  }
  const int ph = cfg.patch_height();
  const int pw = cfg.patch_width();
  Image face(cfg.face_size, cfg.face_size);
  for (int j = 0; j < cfg.num_patches(); ++j) {
    paste(face, patches[j], (j / cfg.cols) * ph, (j % cfg.cols) * pw);
  }
  return face;
}

BlockAssignment spatial_dropout_assignment(const TemporalWindow& window, const StdConfig& cfg,
                                           Rng& rng) {
  validate_config(cfg);
  if (static_cast<int>(window.frames.size()) != cfg.kept_frames()) {
    throw Error(ErrorKind::kShapeMismatch, "window length differs from (1-alpha)*n");
  }
  return draw_blocks(window, cfg.block_size(), rng);
}

BagOfPatches assemble_bag(const FaceSequence& seq, const TemporalWindow& window,
                          const BlockAssignment& assignment, const StdConfig& cfg) {
  return gather(seq, window.k1, assignment, cfg);
}

BagOfPatches sample_bag(const FaceSequence& seq, const StdConfig& cfg, Rng& rng) {
  validate_config(cfg);
  const TemporalWindow window = temporal_dropout(seq, cfg, rng);
  const BlockAssignment assignment = spatial_dropout_assignment(window, cfg, rng);
  return assemble_bag(seq, window, assignment, cfg);
}

std::string variant_name(DropoutVariant variant) {
  switch (variant) {
    case DropoutVariant::kNone: return "none";
    case DropoutVariant::kSpatial: return "S";
    case DropoutVariant::kTemporal: return "T";
    case DropoutVariant::kSpatiotemporal: return "ST";
  }
  return "?";
}

DropoutVariant parse_variant(const std::string& name) {
  if (name == "none" || name == "-") return DropoutVariant::kNone;
  if (name == "S") return DropoutVariant::kSpatial;
  if (name == "T") return DropoutVariant::kTemporal;
  if (name == "ST" || name == "S+T") return DropoutVariant::kSpatiotemporal;
  throw Error(ErrorKind::kInvalidConfig, "unknown dropout variant '" + name + "'");
}

SamplingPlan make_plan(const StdConfig& cfg, DropoutVariant variant) {
  check_grid(cfg);
  const int m = cfg.num_patches();
  SamplingPlan plan{cfg, cfg.n, m};
  switch (variant) {
    case DropoutVariant::kNone:
      break;
    case DropoutVariant::kSpatial:
      if (m % cfg.n != 0) {
        std::ostringstream msg;
        msg << "spatial-only dropout needs n * ((1-beta)*m) = m with all n frames kept, but m="
            << m << " is not divisible by n=" << cfg.n;
        throw Error(ErrorKind::kCoverageViolation, msg.str());
      }
      plan.patches_per_frame = m / cfg.n;
      break;
    case DropoutVariant::kTemporal:
      plan.kept_frames = kept_or_throw(cfg);
      break;
    case DropoutVariant::kSpatiotemporal:
      validate_config(cfg);
      plan.kept_frames = cfg.kept_frames();
      plan.patches_per_frame = cfg.block_size();
      break;
  }
  return plan;
}

BagOfPatches sample_patches(const FaceSequence& seq, const SamplingPlan& plan, Rng& rng) {
  const StdConfig& cfg = plan.base;
  check_sequence(seq, cfg);
  const TemporalWindow window = draw_window(cfg.n, plan.kept_frames, rng);
  const int m = cfg.num_patches();
  const BlockAssignment assignment = plan.patches_per_frame == m
                                         ? full_blocks(window, m)
                                         : draw_blocks(window, plan.patches_per_frame, rng);
  return gather(seq, window.k1, assignment, cfg);
}

void dump_bag(const BagOfPatches& bag, const StdConfig& cfg,
              const std::filesystem::path& png_path) {
  write_png(reassemble(bag.patches, cfg), png_path);
  std::ofstream side(png_path.string() + ".txt", std::ios::binary);
  if (!side) throw Error(ErrorKind::kIo, "cannot write provenance sidecar");
  for (const auto& o : bag.origins) {
    side << o.spatial + 1 << ' ' << o.frame + 1 << ' ' << bag.k1 << ' ' << o.k2 << '\n';
  }
}

}  // namespace stdt
