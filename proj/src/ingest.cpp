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

#include "stdt/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "stdt/error.hpp"

namespace stdt {
namespace fs = std::filesystem;
namespace {

struct LabelRow {
  int label = 0;
  std::string generator_tag;
};

std::map<std::string, LabelRow> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "missing labels file " + path.string());
  std::map<std::string, LabelRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("clip_id", 0) == 0) continue;
    }
    std::stringstream ss(line);
    std::string id, label, tag;
    std::getline(ss, id, ',');
    std::getline(ss, label, ',');
    std::getline(ss, tag, ',');
    if (label != "0" && label != "1") {
      throw Error(ErrorKind::kInvalidConfig, "label must be 0 or 1 for clip " + id);
    }
    rows[id] = {label == "1" ? 1 : 0, tag};
  }
  return rows;
}

fs::path absolute_clean(const fs::path& p) { return fs::weakly_canonical(fs::absolute(p)); }

}  // namespace

std::string frame_filename(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.png", index);
  return buf;
}

std::vector<fs::path> list_frames(const fs::path& clip_dir) {
  std::vector<fs::path> frames;
  if (!fs::is_directory(clip_dir)) throw Error(ErrorKind::kIo, "not a directory: " + clip_dir.string());
  for (const auto& e : fs::directory_iterator(clip_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") frames.push_back(e.path());
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

std::vector<Image> load_frames(const fs::path& clip_dir) {
  std::vector<Image> frames;
  for (const auto& p : list_frames(clip_dir)) frames.push_back(read_png(p));
  return frames;
}

void write_manifest(const fs::path& path, const std::vector<ClipManifestEntry>& entries) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path base = absolute_clean(path).parent_path();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write manifest " + path.string());
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["clip_id"] = e.clip_id;
    j["source_path"] = absolute_clean(e.source_path).lexically_relative(base).generic_string();
    j["label"] = e.label;
    j["split"] = e.split;
    j["frame_count"] = e.frame_count;
    j["generator_tag"] = e.generator_tag;
    out << j.dump() << '\n';
  }
}

std::vector<ClipManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read manifest " + path.string());
  const fs::path base = absolute_clean(path).parent_path();
  std::vector<ClipManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::kInvalidConfig,
                  "manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
    ClipManifestEntry e;
    try {
      e.clip_id = j.at("clip_id").get<std::string>();
      e.source_path = fs::path(j.at("source_path").get<std::string>());
      if (e.source_path.is_relative()) e.source_path = (base / e.source_path).lexically_normal();
      e.label = j.at("label").get<int>();
      e.split = j.at("split").get<std::string>();
      e.frame_count = j.at("frame_count").get<int>();
      e.generator_tag = j.at("generator_tag").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::kInvalidConfig,
                  "manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
    if (e.label != 0 && e.label != 1) throw Error(ErrorKind::kInvalidConfig, "label not in {0,1}");
    if (e.split != "train" && e.split != "val" && e.split != "test") {
      throw Error(ErrorKind::kInvalidConfig, "split must be train, val or test");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ClipManifestEntry> build_manifest(const fs::path& root,
                                              const std::vector<double>& fractions,
                                              std::uint64_t seed) {
  if (fractions.size() != 3 || fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0 ||
      std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw Error(ErrorKind::kInvalidConfig, "split fractions must be three values summing to 1");
  }
  if (!fs::is_directory(root)) throw Error(ErrorKind::kEmptyCorpus, "no corpus at " + root.string());
  const auto labels = read_labels(root / "labels.csv");

  std::vector<ClipManifestEntry> entries;
  for (const auto& d : fs::directory_iterator(root)) {
    if (!d.is_directory()) continue;
    const std::string id = d.path().filename().string();
    auto it = labels.find(id);
    if (it == labels.end()) throw Error(ErrorKind::kInvalidConfig, "clip " + id + " has no label");
    ClipManifestEntry e;
    e.clip_id = id;
    e.source_path = d.path();
    e.label = it->second.label;
    e.generator_tag = it->second.generator_tag;
    e.frame_count = static_cast<int>(list_frames(d.path()).size());
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw Error(ErrorKind::kEmptyCorpus, "no clip directories under " + root.string());
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; });

  std::map<std::pair<std::string, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    strata[{entries[i].generator_tag, entries[i].label}].push_back(i);
  }
  for (auto& [key, members] : strata) {
    Rng rng = make_rng(seed, {fnv1a(key.first), static_cast<std::uint64_t>(key.second)});
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[static_cast<std::size_t>(uniform_int(rng, 0, i - 1))]);
    }
    const auto total = static_cast<double>(members.size());
    const auto n_train = std::min(members.size(), static_cast<std::size_t>(std::lround(fractions[0] * total)));
    const auto n_val = std::min(members.size() - n_train,
                                static_cast<std::size_t>(std::lround(fractions[1] * total)));
    for (std::size_t k = 0; k < members.size(); ++k) {
      entries[members[k]].split = k < n_train ? "train" : (k < n_train + n_val ? "val" : "test");
    }
  }
  return entries;
}

std::vector<Image> window_frames(const std::vector<Image>& all_frames, int n, Rng& rng) {
  const int total = static_cast<int>(all_frames.size());
  if (n <= 0 || total < n) {
    std::ostringstream msg;
    msg << "clip has " << total << " frames, window needs " << n;
    throw Error(ErrorKind::kTooShort, msg.str());
  }
  const auto start = static_cast<std::size_t>(uniform_int(rng, 0, total - n));
  return {all_frames.begin() + start, all_frames.begin() + start + n};
}

std::optional<Detection> FixedBoxDetector::detect(const Image& frame) const {
  Box b = box_;
  b.x = std::clamp(b.x, 0, frame.width() - 1);
  b.y = std::clamp(b.y, 0, frame.height() - 1);
  b.width = std::clamp(b.width, 1, frame.width() - b.x);
  b.height = std::clamp(b.height, 1, frame.height() - b.y);
  return Detection{b, {}};
}

AlignFallback parse_fallback(const std::string& name) {
  if (name == "center") return AlignFallback::kCenter;
  if (name == "skip") return AlignFallback::kSkip;
  throw Error(ErrorKind::kInvalidConfig, "fallback must be center or skip");
}

Box square_around(const Box& box, int image_height, int image_width) {
  const int side = std::min({std::max(box.width, box.height), image_height, image_width});
  // Center in doubled coordinates to avoid rounding drift for odd sizes.
  const int cx2 = 2 * box.x + box.width;
  const int cy2 = 2 * box.y + box.height;
  int x = (cx2 - side) / 2;
  int y = (cy2 - side) / 2;
  x = std::clamp(x, 0, image_width - side);
  y = std::clamp(y, 0, image_height - side);
  return {x, y, side, side};
}

Image detect_align(const Image& frame, const FaceDetector& detector, int face_size,
                   AlignFallback fallback) {
  if (frame.empty()) throw Error(ErrorKind::kShapeMismatch, "empty frame");
  Box square;
  if (auto det = detector.detect(frame)) {
    square = square_around(det->box, frame.height(), frame.width());
  } else if (fallback == AlignFallback::kSkip) {
    throw Error(ErrorKind::kNoFace, "no face detected");
  } else {
    const int side = std::min(frame.height(), frame.width());
    square = {(frame.width() - side) / 2, (frame.height() - side) / 2, side, side};
  }
  Image face = crop(frame, square.y, square.x, square.height, square.width);
  face = resize_bilinear(face, face_size, face_size);
  for (float& v : face.pixels()) v = std::clamp(v, 0.0f, 1.0f);
  return face;
}

std::vector<ClipManifestEntry> ingest_directory(const fs::path& frames_root,
                                                const fs::path& manifest_path,
                                                const FaceDetector& detector,
                                                const IngestOptions& options) {
  auto entries = build_manifest(frames_root, options.fractions, options.seed);
  const fs::path faces_root =
      (manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".")) / "faces";
  std::vector<ClipManifestEntry> kept;
  for (auto& e : entries) {
    std::vector<Image> aligned;
    try {
      for (const auto& p : list_frames(e.source_path)) {
        aligned.push_back(detect_align(read_png(p), detector, options.face_size, options.fallback));
      }
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::kNoFace) continue;
      throw;
    }
    const fs::path dir = faces_root / e.clip_id;
    fs::create_directories(dir);
    for (std::size_t t = 0; t < aligned.size(); ++t) {
      write_png(aligned[t], dir / frame_filename(static_cast<int>(t)));
    }
    e.source_path = dir;
    e.frame_count = static_cast<int>(aligned.size());
    kept.push_back(e);
  }
  if (kept.empty()) throw Error(ErrorKind::kEmptyCorpus, "every clip was skipped during alignment");
  write_manifest(manifest_path, kept);
  return kept;
}

std::vector<ClipData> load_clips(const std::vector<ClipManifestEntry>& entries,
                                 const std::string& split) {
  std::vector<ClipData> clips;
  for (const auto& e : entries) {
    if (!split.empty() && e.split != split) continue;
    clips.push_back({e, load_frames(e.source_path)});
  }
  return clips;
}

FaceSequence to_sequence(const ClipData& clip) {
  return {clip.entry.clip_id, clip.frames, clip.entry.label, clip.entry.generator_tag};
}

}  // namespace stdt
