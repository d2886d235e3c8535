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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "stdt/error.hpp"
#include "stdt/ingest.hpp"
#include "stdt/synth.hpp"
#include "support.hpp"

namespace stdt {
namespace {
namespace fs = std::filesystem;

SynthConfig with_tag(const std::string& tag) {
  SynthConfig cfg;
  cfg.generator_tag = tag;
  return cfg;
}

double sq(double v) { return v * v; }

double max_abs_diff(const FaceSequence& a, const FaceSequence& b) {
  double worst = 0.0;
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    const auto pa = a.frames[t].pixels(), pb = b.frames[t].pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) worst = std::max(worst, std::abs(double(pa[i]) - pb[i]));
  }
  return worst;
}

TEST(SynthConfig, Validation) {
  EXPECT_NO_THROW(validate_synth_config(SynthConfig{}));
  SynthConfig c;
  c.amplitude = -1.0;
  EXPECT_THROW(validate_synth_config(c), Error);
  c = SynthConfig{};
  c.region_rows = 5;
  EXPECT_THROW(validate_synth_config(c), Error);
  c = SynthConfig{};
  c.face_size = 30;
  EXPECT_THROW(validate_synth_config(c), Error);
  c = SynthConfig{};
  c.generator_tag = "other";
  EXPECT_THROW(validate_synth_config(c), Error);
}

TEST(Region, SnapsToGridAndFits) {
  const SynthConfig cfg;
  const int ph = cfg.face_size / cfg.rows;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Region r = synth_region(seed, cfg);
    EXPECT_EQ(r.top % ph, 0);
    EXPECT_EQ(r.left % ph, 0);
    EXPECT_EQ(r.height, cfg.region_rows * ph);
    EXPECT_EQ(r.width, cfg.region_cols * ph);
    EXPECT_LE(r.top + r.height, cfg.face_size);
    EXPECT_LE(r.left + r.width, cfg.face_size);
  }
}

TEST(RealClip, DeterministicAndLabelled) {
  const SynthConfig cfg;
  const FaceSequence a = generate_real_clip(5, cfg), b = generate_real_clip(5, cfg);
  EXPECT_EQ(a.label, 0);
  ASSERT_EQ(static_cast<int>(a.frames.size()), cfg.n_frames);
  for (std::size_t t = 0; t < a.frames.size(); ++t) EXPECT_TRUE(a.frames[t] == b.frames[t]);
  EXPECT_FALSE(generate_real_clip(6, cfg).frames[0] == a.frames[0]);
}

TEST(RealClip, IndependentOfInconsistencySettings) {
  SynthConfig other = with_tag("blendB");
  other.amplitude = 9.0;
  other.flicker_period = 3;
  EXPECT_EQ(max_abs_diff(generate_real_clip(4, SynthConfig{}), generate_real_clip(4, other)), 0.0);
}

TEST(RealClip, InterFrameDeltaWithinDriftBound) {
  const SynthConfig cfg;
  const double bound = drift_delta_bound(cfg);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FaceSequence clip = generate_real_clip(seed, cfg);
    for (std::size_t t = 1; t < clip.frames.size(); ++t) {
      const auto a = clip.frames[t - 1].pixels(), b = clip.frames[t].pixels();
      double sum = 0.0, worst = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(double(b[i]) - a[i]);
        sum += d;
        worst = std::max(worst, d);
      }
      EXPECT_LE(sum / a.size(), bound);
      EXPECT_LE(worst, bound + 1e-6);
    }
  }
}

TEST(FakeClip, ZeroAmplitudeEqualsReal) {
  for (const char* tag : {"jitterA", "blendB"}) {
    SynthConfig cfg = with_tag(tag);
    cfg.amplitude = 0.0;
    const FaceSequence fake = generate_fake_clip(3, cfg);
    EXPECT_EQ(fake.label, 1);
    EXPECT_EQ(fake.generator_tag, tag);
    EXPECT_EQ(max_abs_diff(fake, generate_real_clip(3, cfg)), 0.0) << tag;
  }
}

TEST(FakeClip, ContinuousInAmplitude) {
  for (const char* tag : {"jitterA", "blendB"}) {
    SynthConfig cfg = with_tag(tag);
    double previous = 1.0;
    for (double amp : {1e-1, 1e-2, 1e-3}) {
      cfg.amplitude = amp;
      const double d = max_abs_diff(generate_fake_clip(8, cfg), generate_real_clip(8, cfg));
      EXPECT_LE(d, previous) << tag;
      EXPECT_LT(d, 0.5 * amp + 1e-6) << tag;
      previous = d;
    }
  }
}

TEST(FakeClip, DifferenceEnergyInsideRegion) {
  for (const char* tag : {"jitterA", "blendB"}) {
    const SynthConfig cfg = with_tag(tag);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const FaceSequence fake = generate_fake_clip(seed, cfg), real = generate_real_clip(seed, cfg);
      const Region r = synth_region(seed, cfg);
      double inside = 0.0, total = 0.0;
      for (std::size_t t = 0; t < fake.frames.size(); ++t) {
        for (int y = 0; y < cfg.face_size; ++y) {
          for (int x = 0; x < cfg.face_size; ++x) {
            for (int c = 0; c < 3; ++c) {
              const double e = sq(fake.frames[t].at(y, x, c) - real.frames[t].at(y, x, c));
              total += e;
              if (r.contains(y, x)) inside += e;
            }
          }
        }
      }
      ASSERT_GT(total, 0.0);
      EXPECT_GE(inside / total, 0.95) << tag << " seed " << seed;
    }
  }
}

TEST(FakeClip, TemporalVarianceHigherInsideRegion) {
  for (const char* tag : {"jitterA", "blendB"}) {
    const SynthConfig cfg = with_tag(tag);
    double inside = 0.0, outside = 0.0;
    long n_in = 0, n_out = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const FaceSequence fake = generate_fake_clip(seed, cfg);
      const Region r = synth_region(seed, cfg);
      const double frames = static_cast<double>(fake.frames.size());
      for (int y = 0; y < cfg.face_size; ++y) {
        for (int x = 0; x < cfg.face_size; ++x) {
          for (int c = 0; c < 3; ++c) {
            double s = 0.0, s2 = 0.0;
            for (const auto& f : fake.frames) {
              s += f.at(y, x, c);
              s2 += sq(f.at(y, x, c));
            }
            const double var = s2 / frames - sq(s / frames);
            if (r.contains(y, x)) {
              inside += var;
              ++n_in;
            } else {
              outside += var;
              ++n_out;
            }
          }
        }
      }
    }
    EXPECT_GT(inside / n_in, outside / n_out) << tag;
  }
}

TEST(FakeClip, GeneratorsDifferOnlyInRegion) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FaceSequence a = generate_fake_clip(seed, with_tag("jitterA"));
    const FaceSequence b = generate_fake_clip(seed, with_tag("blendB"));
    const Region r = synth_region(seed, SynthConfig{});
    for (std::size_t t = 0; t < a.frames.size(); ++t) {
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
          if (r.contains(y, x)) continue;
          for (int c = 0; c < 3; ++c) ASSERT_EQ(a.frames[t].at(y, x, c), b.frames[t].at(y, x, c));
        }
      }
    }
  }
}

std::string tree_digest(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::ostringstream out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out << fs::relative(f, root).generic_string() << ' ' << fnv1a(ss.str()) << '\n';
  }
  return out.str();
}

TEST(BuildCorpus, CountsAndDeterminism) {
  SynthConfig cfg;
  cfg.n_frames = 2;
  cfg.face_size = 16;
  const fs::path a = testing::scratch_dir("corpus_a"), b = testing::scratch_dir("corpus_b");
  const CorpusSummary sa = build_corpus(20, cfg, {"jitterA"}, 11, a);
  build_corpus(20, cfg, {"jitterA"}, 11, b);
  EXPECT_EQ(sa.clip_ids.size(), 40u);
  const auto entries = read_manifest(sa.manifest);
  EXPECT_EQ(entries.size(), 40u);
  int fakes = 0, dirs = 0;
  for (const auto& e : entries) fakes += e.label;
  for (const auto& d : fs::directory_iterator(a / "frames")) dirs += d.is_directory();
  EXPECT_EQ(fakes, 20);
  EXPECT_EQ(dirs, 40);
  EXPECT_EQ(tree_digest(a), tree_digest(b));
}

TEST(BuildCorpus, DisjointSeedsShareNoFrames) {
  SynthConfig cfg;
  cfg.n_frames = 3;
  const fs::path a = testing::scratch_dir("corpus_s1"), b = testing::scratch_dir("corpus_s2");
  build_corpus(10, cfg, {"jitterA", "blendB"}, 1, a);
  build_corpus(10, cfg, {"jitterA", "blendB"}, 2, b);
  std::set<std::uint64_t> seen;
  auto hashes = [](const fs::path& root) {
    std::vector<std::uint64_t> out;
    for (const auto& e : fs::recursive_directory_iterator(root / "frames")) {
      if (e.path().extension() != ".png") continue;
      const Image img = read_png(e.path());
      const auto px = img.pixels();
      out.push_back(fnv1a(std::string_view(reinterpret_cast<const char*>(px.data()), px.size_bytes())));
    }
    return out;
  };
  const auto ha = hashes(a);
  EXPECT_EQ(ha.size(), 120u);
  seen.insert(ha.begin(), ha.end());
  for (auto h : hashes(b)) EXPECT_EQ(seen.count(h), 0u);
}

}  // namespace
}  // namespace stdt
