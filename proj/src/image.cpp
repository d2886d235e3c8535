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

#include "stdt/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "stdt/error.hpp"

namespace stdt {
namespace {

cv::Mat to_bgr8(const Image& image) {
  cv::Mat mat(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        const float v = std::clamp(image.at(y, x, c), 0.0f, 1.0f);
        // OpenCV stores BGR.
        row[x * 3 + (2 - c)] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  return mat;
}

Image from_bgr8(const cv::Mat& mat) {
  Image image(mat.rows, mat.cols);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < mat.cols; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) {
        image.at(y, x, c) = static_cast<float>(row[x * 3 + (2 - c)]) / 255.0f;
      }
    }
  }
  return image;
}

}  // namespace

Image crop(const Image& src, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || top + height > src.height() ||
      left + width > src.width() || height <= 0 || width <= 0) {
    throw Error(ErrorKind::kShapeMismatch, "crop rectangle outside image");
  }
  Image out(height, width);
  for (int y = 0; y < height; ++y) {
    const float* from = &src.pixels()[(static_cast<std::size_t>(top + y) * src.width() + left) *
                                      Image::kChannels];
    std::copy(from, from + static_cast<std::size_t>(width) * Image::kChannels,
              &out.at(y, 0, 0));
  }
  return out;
}

void paste(Image& dst, const Image& patch, int top, int left) {
  if (top < 0 || left < 0 || top + patch.height() > dst.height() ||
      left + patch.width() > dst.width()) {
    throw Error(ErrorKind::kShapeMismatch, "paste rectangle outside image");
  }
  for (int y = 0; y < patch.height(); ++y) {
    const float* from = &patch.pixels()[static_cast<std::size_t>(y) * patch.width() *
                                        Image::kChannels];
    std::copy(from, from + static_cast<std::size_t>(patch.width()) * Image::kChannels,
              &dst.at(top + y, left, 0));
  }
}

Image resize_bilinear(const Image& src, int height, int width) {
  if (src.empty() || height <= 0 || width <= 0) {
    throw Error(ErrorKind::kShapeMismatch, "resize of empty image");
  }
  if (height == src.height() && width == src.width()) return src;
  Image out(height, width);
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), src.height() - 1);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), src.width() - 1);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < Image::kChannels; ++c) {
        const double top = (1.0 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c);
        const double bottom = (1.0 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c);
        out.at(y, x, c) = static_cast<float>((1.0 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

std::vector<unsigned char> encode_png(const Image& image) {
  std::vector<unsigned char> bytes;
  // Fixed compression level keeps the encoded bytes reproducible.
  if (!cv::imencode(".png", to_bgr8(image), bytes, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    throw Error(ErrorKind::kIo, "png encode failed");
  }
  return bytes;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (!cv::imwrite(path.string(), to_bgr8(image), {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    throw Error(ErrorKind::kIo, "cannot write " + path.string());
  }
}

Image read_png(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (mat.empty()) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  return from_bgr8(mat);
}

std::vector<unsigned char> encode_jpeg(const Image& image, int quality) {
  std::vector<unsigned char> bytes;
  const std::vector<int> params = {cv::IMWRITE_JPEG_QUALITY, std::clamp(quality, 1, 100),
                                   cv::IMWRITE_JPEG_OPTIMIZE, 1};
  if (!cv::imencode(".jpg", to_bgr8(image), bytes, params)) {
    throw Error(ErrorKind::kIo, "jpeg encode failed");
  }
  return bytes;
}

Image decode_image(std::span<const unsigned char> bytes) {
  cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1,
                 const_cast<unsigned char*>(bytes.data()));
  cv::Mat mat = cv::imdecode(buffer, cv::IMREAD_COLOR);
  if (mat.empty()) throw Error(ErrorKind::kIo, "image decode failed");
  return from_bgr8(mat);
}

}  // namespace stdt
