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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace stdt {

// Interleaved RGB image, row-major, float channels in [0, 1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, float fill = 0.0f)
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * width * kChannels, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<float> pixels() { return data_; }
  std::span<const float> pixels() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// Copies the rectangle [top, top+height) x [left, left+width).
Image crop(const Image& src, int top, int left, int height, int width);

// Writes `patch` into `dst` with its top-left corner at (top, left).
void paste(Image& dst, const Image& patch, int top, int left);

// Bilinear resize with half-pixel centers and edge clamping.
Image resize_bilinear(const Image& src, int height, int width);

// 8-bit RGB PNG codec. Values are quantized to k/255 on write.
void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);
std::vector<unsigned char> encode_png(const Image& image);

// Baseline JPEG round trip at the given quality (1..100).
std::vector<unsigned char> encode_jpeg(const Image& image, int quality);
Image decode_image(std::span<const unsigned char> bytes);

}  // namespace stdt
