// Copyright 2026 The Declutter Authors
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
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "declutter/diff/tensor.hpp"

namespace declutter {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H x W x 3 image with values in [0, 1], stored row-major HWC.
struct Image {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, float fill = 0.0f);

  bool empty() const { return data.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * kChannels + c;
  }
  float& at(int y, int x, int c) { return data[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data[index(y, x, c)]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// H x W binary map, one byte per pixel holding 0 or 1.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0);

  std::size_t pixel_count() const { return bits.size(); }
  std::uint8_t& at(int y, int x) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::size_t area() const;
  bool none() const { return area() == 0; }

  friend bool operator==(const Mask&, const Mask&) = default;
};

struct BoundingBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = -1;  // inclusive
  int max_y = -1;
  bool empty() const { return max_x < min_x; }
};

BoundingBox bounding_box(const Mask& mask);

/// Pixel-wise union; shapes must match.
Mask mask_union(const Mask& a, const Mask& b);
/// |a & b| / |a | b|; 0 when both are empty.
double mask_iou(const Mask& a, const Mask& b);

/// A detected or annotated object.
struct ObjectMask {
  int id = 0;
  std::string label;
  Mask mask;

  friend bool operator==(const ObjectMask&, const ObjectMask&) = default;
};

/// CHW float tensor ([3, H, W]) for the networks.
diff::Tensor image_to_chw(const Image& image);
Image image_from_chw(const diff::Tensor& tensor);
/// [1, H, W] tensor of 0/1 values.
diff::Tensor mask_to_tensor(const Mask& mask);

/// Nearest-neighbour resampling (pixel centres).
Mask resize_nearest(const Mask& mask, int height, int width);

/// Run-length encoding in row-major order:
///   {"height": H, "width": W, "start": 0|1, "runs": [n0, n1, ...]}
/// Runs alternate value starting at `start`; every run is positive.
nlohmann::json mask_to_rle(const Mask& mask);
Mask mask_from_rle(const nlohmann::json& rle);

// 8-bit RGB PNG I/O. Decoding accepts any PNG colour type and converts it to RGB;
// values map to [0, 1] by /255 and back by rounding v*255.
Image decode_png(const std::vector<std::uint8_t>& bytes);
Image decode_png(const std::string& bytes);
std::vector<std::uint8_t> encode_png(const Image& image);
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);
/// Grayscale PNG with 0 -> 0 and 1 -> 255.
std::vector<std::uint8_t> encode_mask_png(const Mask& mask);
/// Grayscale PNG of a [1, H, W] or [H, W] map with values in [0, 1].
std::vector<std::uint8_t> encode_gray_png(const std::vector<float>& values, int height, int width);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace declutter
