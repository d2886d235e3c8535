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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stdt/image.hpp"
#include "stdt/rng.hpp"
#include "stdt/sampler.hpp"

namespace stdt {

struct ClipManifestEntry {
  std::string clip_id;
  std::filesystem::path source_path;  // directory of <%06d>.png frames
  int label = 0;
  std::string split;                  // train | val | test
  int frame_count = 0;
  std::string generator_tag;

  bool operator==(const ClipManifestEntry&) const = default;
};

// "000000.png", "000001.png", ...
std::string frame_filename(int index);

// Sorted frame files of one clip directory.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& clip_dir);
std::vector<Image> load_frames(const std::filesystem::path& clip_dir);

// JSON-lines, one object per clip with keys clip_id, source_path, label,
// split, frame_count, generator_tag. Source paths are written relative to the
// manifest's directory and resolved against it when read.
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ClipManifestEntry>& entries);
std::vector<ClipManifestEntry> read_manifest(const std::filesystem::path& path);

// Scans <root>/<clip_id>/ frame directories, labels them from
// <root>/labels.csv (clip_id,label,generator_tag) and assigns a seeded split
// stratified by (generator_tag, label). Throws EmptyCorpus when no clip
// directory is found.
std::vector<ClipManifestEntry> build_manifest(const std::filesystem::path& root,
                                              const std::vector<double>& fractions,
                                              std::uint64_t seed);

// n consecutive frames starting at a uniformly drawn offset; TooShort when the
// clip has fewer than n frames.
std::vector<Image> window_frames(const std::vector<Image>& all_frames, int n, Rng& rng);

struct Box {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct Detection {
  Box box;
  std::vector<std::pair<double, double>> landmarks;
};

// Face detector contract: the returned box lies inside the image.
class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  virtual std::optional<Detection> detect(const Image& frame) const = 0;
};

// Never finds a face; every frame goes through the fallback.
class NullDetector : public FaceDetector {
 public:
  std::optional<Detection> detect(const Image&) const override { return std::nullopt; }
};

// Returns the same box for every frame (clipped to the image).
class FixedBoxDetector : public FaceDetector {
 public:
  explicit FixedBoxDetector(Box box) : box_(box) {}
  std::optional<Detection> detect(const Image& frame) const override;

 private:
  Box box_;
};

enum class AlignFallback { kCenter, kSkip };

AlignFallback parse_fallback(const std::string& name);

// Square crop of side max(w, h) centered on the detection (shifted to stay in
// the image), resized bilinearly to face_size. Without a detection: center
// square crop, or NoFace when the fallback is kSkip.
Image detect_align(const Image& frame, const FaceDetector& detector, int face_size,
                   AlignFallback fallback = AlignFallback::kCenter);

// Square crop rectangle used by detect_align for a given box.
Box square_around(const Box& box, int image_height, int image_width);

struct IngestOptions {
  int face_size = 384;
  AlignFallback fallback = AlignFallback::kCenter;
  std::vector<double> fractions = {0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

// Aligns every frame of every clip under frames_root into
// <dirname(manifest)>/faces/<clip_id>/ and writes the manifest. Clips with a
// NoFace frame are dropped under the skip fallback.
std::vector<ClipManifestEntry> ingest_directory(const std::filesystem::path& frames_root,
                                                const std::filesystem::path& manifest_path,
                                                const FaceDetector& detector,
                                                const IngestOptions& options);

// One manifest entry with its decoded frames.
struct ClipData {
  ClipManifestEntry entry;
  std::vector<Image> frames;
};

std::vector<ClipData> load_clips(const std::vector<ClipManifestEntry>& entries,
                                 const std::string& split = "");

FaceSequence to_sequence(const ClipData& clip);

}  // namespace stdt
