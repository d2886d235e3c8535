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
#include <string>
#include <vector>

#include "stdt/image.hpp"
#include "stdt/rng.hpp"
#include "stdt/sampler.hpp"

namespace stdt {

enum class Perturbation { kFlip, kBlur, kBright, kCompress, kNoise };

std::string perturbation_name(Perturbation p);
// Comma-separated names: flip, blur, bright, compress, noise.
std::vector<Perturbation> parse_perturbations(const std::string& list);

// Left-right mirror.
Image flip(const Image& image);

// Mean filter over a k x k window with symmetric (edge-repeating) reflection
// at the borders. For even k the window spans [i - k/2, i + k/2 - 1].
Image box_blur(const Image& image, int kernel = 10);

// Multiplies every channel by factor and clamps to [0, 1].
Image brighten(const Image& image, double factor = 1.25);

struct CompressResult {
  Image image;
  int quality = 0;
  std::size_t original_bytes = 0;  // lossless PNG size of the input
  std::size_t encoded_bytes = 0;
  bool unreachable = false;        // no quality landed inside the band

  double ratio() const { return static_cast<double>(original_bytes) / encoded_bytes; }
};

// JPEG re-encode with the quality found by bisection so that the encoded size
// is within +-tolerance of original/ratio, then decoded back. When the band is
// unreachable the closest quality is used and the result is flagged.
CompressResult compress(const Image& image, double ratio = 4.0, double tolerance = 0.1);

// i.i.d. normal draws with the given mean and variance.
std::vector<double> noise_field(std::size_t count, double mean, double variance, Rng& rng);

// Adds noise_field(mean, variance) per channel value and clamps to [0, 1].
Image gaussian_noise(const Image& image, Rng& rng, double mean = 0.1, double variance = 0.01);

// Applies p to every frame of seq. Labels and shapes are preserved.
FaceSequence perturb(const FaceSequence& seq, Perturbation p, Rng& rng);

}  // namespace stdt
