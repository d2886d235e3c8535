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

#include "stdt/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stdt/error.hpp"

namespace stdt {
namespace {

// Symmetric reflection: ... c b a | a b c ... | c b a ...
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

std::string perturbation_name(Perturbation p) {
  switch (p) {
    case Perturbation::kFlip: return "flip";
    case Perturbation::kBlur: return "blur";
    case Perturbation::kBright: return "bright";
    case Perturbation::kCompress: return "compress";
    case Perturbation::kNoise: return "noise";
  }
  return "?";
}

std::vector<Perturbation> parse_perturbations(const std::string& list) {
  std::vector<Perturbation> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "flip") out.push_back(Perturbation::kFlip);
    else if (item == "blur") out.push_back(Perturbation::kBlur);
    else if (item == "bright") out.push_back(Perturbation::kBright);
    else if (item == "compress") out.push_back(Perturbation::kCompress);
    else if (item == "noise" || item == "gaussian_noise") out.push_back(Perturbation::kNoise);
    else throw Error(ErrorKind::kInvalidConfig, "unknown perturbation '" + item + "'");
  }
  return out;
}

Image flip(const Image& image) {
  Image out(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        out.at(y, x, c) = image.at(y, image.width() - 1 - x, c);
      }
    }
  }
  return out;
}

Image box_blur(const Image& image, int kernel) {
  if (kernel <= 0) throw Error(ErrorKind::kInvalidConfig, "blur kernel must be positive");
  const int h = image.height();
  const int w = image.width();
  const int before = kernel / 2;
  // Separable: horizontal window sums, then vertical, accumulated in double.
  std::vector<double> rows(static_cast<std::size_t>(h) * w * Image::kChannels, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        double s = 0.0;
        for (int k = 0; k < kernel; ++k) s += image.at(y, reflect(x - before + k, w), c);
        rows[(static_cast<std::size_t>(y) * w + x) * Image::kChannels + c] = s;
      }
    }
  }
  const double area = static_cast<double>(kernel) * kernel;
  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        double s = 0.0;
        for (int k = 0; k < kernel; ++k) {
          const int yy = reflect(y - before + k, h);
          s += rows[(static_cast<std::size_t>(yy) * w + x) * Image::kChannels + c];
        }
        out.at(y, x, c) = static_cast<float>(s / area);
      }
    }
  }
  return out;
}

Image brighten(const Image& image, double factor) {
  Image out = image;
  for (float& v : out.pixels()) v = static_cast<float>(std::clamp(v * factor, 0.0, 1.0));
  return out;
}

CompressResult compress(const Image& image, double ratio, double tolerance) {
  CompressResult result;
  result.original_bytes = encode_png(image).size();
  const double target = static_cast<double>(result.original_bytes) / ratio;
  const double lo_band = target * (1.0 - tolerance);
  const double hi_band = target * (1.0 + tolerance);

  // Encoded size grows with quality; find the largest quality at or below target.
  int lo = 1, hi = 100;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (static_cast<double>(encode_jpeg(image, mid).size()) <= target) lo = mid;
    else hi = mid - 1;
  }
  std::vector<unsigned char> best;
  double best_gap = 0.0;
  for (int q : {lo, std::min(lo + 1, 100)}) {
    auto bytes = encode_jpeg(image, q);
    const double gap = std::abs(static_cast<double>(bytes.size()) - target);
    if (best.empty() || gap < best_gap) {
      best = std::move(bytes);
      best_gap = gap;
      result.quality = q;
    }
  }
  result.encoded_bytes = best.size();
  const auto size = static_cast<double>(best.size());
  result.unreachable = size < lo_band || size > hi_band;
  result.image = decode_image(best);
  return result;
}

std::vector<double> noise_field(std::size_t count, double mean, double variance, Rng& rng) {
  const double sd = std::sqrt(variance);
  std::vector<double> out(count);
  for (double& v : out) v = mean + sd * standard_normal(rng);
  return out;
}

Image gaussian_noise(const Image& image, Rng& rng, double mean, double variance) {
  const auto noise = noise_field(image.size(), mean, variance, rng);
  Image out = image;
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<float>(std::clamp(static_cast<double>(px[i]) + noise[i], 0.0, 1.0));
  }
  return out;
}

FaceSequence perturb(const FaceSequence& seq, Perturbation p, Rng& rng) {
  FaceSequence out = seq;
  for (auto& frame : out.frames) {
    switch (p) {
      case Perturbation::kFlip: frame = flip(frame); break;
      case Perturbation::kBlur: frame = box_blur(frame); break;
      case Perturbation::kBright: frame = brighten(frame); break;
      case Perturbation::kCompress: frame = compress(frame).image; break;
      case Perturbation::kNoise: frame = gaussian_noise(frame, rng); break;
    }
  }
  return out;
}

}  // namespace stdt
