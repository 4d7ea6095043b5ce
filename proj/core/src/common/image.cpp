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

#include "declutter/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace declutter {

Image::Image(int h, int w, float fill) : height(h), width(w) {
  if (h <= 0 || w <= 0) throw ImageError("image dimensions must be positive");
  data.assign(static_cast<std::size_t>(h) * w * kChannels, fill);
}

Mask::Mask(int h, int w, std::uint8_t fill) : height(h), width(w) {
  if (h <= 0 || w <= 0) throw ImageError("mask dimensions must be positive");
  bits.assign(static_cast<std::size_t>(h) * w, fill);
}

std::size_t Mask::area() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BoundingBox bounding_box(const Mask& mask) {
  BoundingBox box{mask.width, mask.height, -1, -1};
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(y, x)) continue;
      box.min_x = std::min(box.min_x, x);
      box.min_y = std::min(box.min_y, y);
      box.max_x = std::max(box.max_x, x);
      box.max_y = std::max(box.max_y, y);
    }
  }
  return box;
}

Mask mask_union(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) throw ImageError("mask union: shape mismatch");
  Mask out = a;
  for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = (a.bits[i] | b.bits[i]) ? 1 : 0;
  return out;
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) throw ImageError("mask iou: shape mismatch");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += (a.bits[i] && b.bits[i]) ? 1 : 0;
    uni += (a.bits[i] || b.bits[i]) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

diff::Tensor image_to_chw(const Image& image) {
  diff::Tensor t(diff::Shape{Image::kChannels, image.height, image.width});
  const std::size_t plane = image.pixel_count();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < Image::kChannels; ++c) t[c * plane + p] = image.data[p * Image::kChannels + c];
  }
  return t;
}

Image image_from_chw(const diff::Tensor& tensor) {
  if (tensor.rank() != 3 || tensor.dim(0) != Image::kChannels) {
    throw ImageError("expected a [3,H,W] tensor, got " + diff::shape_string(tensor.dims()));
  }
  Image image(tensor.dim(1), tensor.dim(2));
  const std::size_t plane = image.pixel_count();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < Image::kChannels; ++c) image.data[p * Image::kChannels + c] = tensor[c * plane + p];
  }
  return image;
}

diff::Tensor mask_to_tensor(const Mask& mask) {
  diff::Tensor t(diff::Shape{1, mask.height, mask.width});
  for (std::size_t i = 0; i < mask.bits.size(); ++i) t[i] = mask.bits[i] ? 1.0f : 0.0f;
  return t;
}

Mask resize_nearest(const Mask& mask, int height, int width) {
  if (mask.height == height && mask.width == width) return mask;
  Mask out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height - 1, static_cast<int>((y + 0.5) * mask.height / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width - 1, static_cast<int>((x + 0.5) * mask.width / width));
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

nlohmann::json mask_to_rle(const Mask& mask) {
  nlohmann::json runs = nlohmann::json::array();
  const std::uint8_t start = mask.bits.empty() ? 0 : mask.bits.front();
  std::uint8_t current = start;
  std::size_t length = 0;
  for (std::uint8_t v : mask.bits) {
    if (v == current) {
      ++length;
    } else {
      runs.push_back(length);
      current = v;
      length = 1;
    }
  }
  if (length) runs.push_back(length);
  return {{"height", mask.height}, {"width", mask.width}, {"start", start}, {"runs", runs}};
}

Mask mask_from_rle(const nlohmann::json& rle) {
  try {
    Mask mask(rle.at("height").get<int>(), rle.at("width").get<int>());
    int value = rle.at("start").get<int>();
    if (value != 0 && value != 1) throw ImageError("rle start must be 0 or 1");
    std::size_t pos = 0;
    for (const auto& run : rle.at("runs")) {
      const auto n = run.get<std::size_t>();
      if (n == 0 || pos + n > mask.bits.size()) throw ImageError("rle run out of range");
      std::fill_n(mask.bits.begin() + static_cast<std::ptrdiff_t>(pos), n, static_cast<std::uint8_t>(value));
      pos += n;
      value ^= 1;
    }
    if (pos != mask.bits.size()) throw ImageError("rle runs do not cover the mask");
    return mask;
  } catch (const nlohmann::json::exception& e) {
    throw ImageError(std::string("malformed rle mask: ") + e.what());
  }
}

namespace {

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

Image decode_png_raw(const void* data, std::size_t size) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, data, size)) {
    throw ImageError(std::string("not a decodable PNG: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  if (png.width == 0 || png.height == 0) {
    png_image_free(&png);
    throw ImageError("PNG has zero size");
  }
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    throw ImageError(std::string("PNG decode failed: ") + png.message);
  }
  Image image(static_cast<int>(png.height), static_cast<int>(png.width));
  for (std::size_t i = 0; i < pixels.size(); ++i) image.data[i] = static_cast<float>(pixels[i]) / 255.0f;
  return image;
}

std::vector<std::uint8_t> encode_raw(const std::vector<std::uint8_t>& pixels, int height, int width,
                                     png_uint_32 format) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(width);
  png.height = static_cast<png_uint_32>(height);
  png.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw ImageError(std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw ImageError(std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

Image decode_png(const std::vector<std::uint8_t>& bytes) { return decode_png_raw(bytes.data(), bytes.size()); }
Image decode_png(const std::string& bytes) { return decode_png_raw(bytes.data(), bytes.size()); }

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty()) throw ImageError("cannot encode an empty image");
  std::vector<std::uint8_t> pixels(image.data.size());
  std::transform(image.data.begin(), image.data.end(), pixels.begin(), quantize);
  return encode_raw(pixels, image.height, image.width, PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_mask_png(const Mask& mask) {
  std::vector<std::uint8_t> pixels(mask.bits.size());
  std::transform(mask.bits.begin(), mask.bits.end(), pixels.begin(), [](std::uint8_t v) { return v ? 255 : 0; });
  return encode_raw(pixels, mask.height, mask.width, PNG_FORMAT_GRAY);
}

std::vector<std::uint8_t> encode_gray_png(const std::vector<float>& values, int height, int width) {
  if (values.size() != static_cast<std::size_t>(height) * width) throw ImageError("gray map size mismatch");
  std::vector<std::uint8_t> pixels(values.size());
  std::transform(values.begin(), values.end(), pixels.begin(), quantize);
  return encode_raw(pixels, height, width, PNG_FORMAT_GRAY);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("failed writing " + path.string());
}

Image read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

void write_png(const std::filesystem::path& path, const Image& image) { write_file(path, encode_png(image)); }

}  // namespace declutter
