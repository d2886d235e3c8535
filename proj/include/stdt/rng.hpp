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
#include <initializer_list>
#include <random>
#include <string_view>

namespace stdt {

// All randomness flows through explicitly passed engines; nothing reads a
// global generator.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a, stable across platforms (std::hash is not).
std::uint64_t fnv1a(std::string_view text);

// Derives an independent substream seed from a base seed and a list of tags,
// e.g. derive_seed(seed, {kTagBag, epoch, clip, visit}).
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

inline Rng make_rng(std::uint64_t base,
                    std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(base, tags));
}

// Uniform integer in [lo, hi] by rejection sampling on the raw engine output,
// so results do not depend on the standard library's distribution code.
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Standard normal via Box-Muller (one value per call, no cached state).
double standard_normal(Rng& rng);

}  // namespace stdt
