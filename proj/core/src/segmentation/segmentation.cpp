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

#include "declutter/segmentation/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "declutter/diff/init.hpp"

namespace declutter::segmentation {
namespace {

constexpr int kClusters = 4;
constexpr int kMaxIterations = 25;

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

using Color = std::array<double, 3>;

double distance2(const Color& a, const Color& b) {
  double d = 0.0;
  for (int c = 0; c < 3; ++c) d += (a[c] - b[c]) * (a[c] - b[c]);
  return d;
}

std::vector<int> kmeans_labels(const Image& image) {
  const std::size_t n = image.pixel_count();
  std::vector<Color> pixels(n);
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) pixels[p][c] = image.data[p * 3 + c];
  }

  // k-means++ seeding with a fixed seed; stops early when every pixel already
  // coincides with a centre.
  diff::Rng rng(0);
  std::vector<Color> centres{pixels[0]};
  std::vector<double> nearest(n);
  while (static_cast<int>(centres.size()) < kClusters) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centres) best = std::min(best, distance2(pixels[p], c));
      nearest[p] = best;
      total += best;
    }
    if (total <= 0.0) break;
    double pick = diff::uniform01(rng) * total;
    std::size_t chosen = n - 1;
    for (std::size_t p = 0; p < n; ++p) {
      pick -= nearest[p];
      if (pick < 0.0 && nearest[p] > 0.0) {
        chosen = p;
        break;
      }
    }
    centres.push_back(pixels[chosen]);
  }

  std::vector<int> labels(n, -1);
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    bool changed = false;
    for (std::size_t p = 0; p < n; ++p) {
      int best = 0;
      double best_d = distance2(pixels[p], centres[0]);
      for (int k = 1; k < static_cast<int>(centres.size()); ++k) {
        const double d = distance2(pixels[p], centres[static_cast<std::size_t>(k)]);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (labels[p] != best) {
        labels[p] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Color> sums(centres.size(), Color{0, 0, 0});
    std::vector<std::size_t> counts(centres.size(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto k = static_cast<std::size_t>(labels[p]);
      for (int c = 0; c < 3; ++c) sums[k][c] += pixels[p][c];
      ++counts[k];
    }
    for (std::size_t k = 0; k < centres.size(); ++k) {
      if (!counts[k]) continue;
      for (int c = 0; c < 3; ++c) centres[k][c] = sums[k][c] / static_cast<double>(counts[k]);
    }
  }
  return labels;
}

std::vector<ObjectMask> heuristic_masks(const Image& image) {
  const int h = image.height;
  const int w = image.width;
  const auto labels = kmeans_labels(image);
  std::vector<int> component(labels.size(), -1);
  std::vector<std::vector<std::size_t>> components;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (component[start] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.emplace_back();
    component[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      components.back().push_back(p);
      const int y = static_cast<int>(p / static_cast<std::size_t>(w));
      const int x = static_cast<int>(p % static_cast<std::size_t>(w));
      const int ny[4] = {y - 1, y + 1, y, y};
      const int nx[4] = {x, x, x - 1, x + 1};
      for (int k = 0; k < 4; ++k) {
        if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w) continue;
        const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
        if (component[q] < 0 && labels[q] == labels[p]) {
          component[q] = id;
          stack.push_back(q);
        }
      }
    }
  }

  std::size_t largest = 0;
  for (std::size_t i = 1; i < components.size(); ++i) {
    if (components[i].size() > components[largest].size()) largest = i;
  }
  const double min_area = 0.005 * static_cast<double>(labels.size());
  std::vector<ObjectMask> masks;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i == largest || static_cast<double>(components[i].size()) < min_area) continue;
    ObjectMask object{static_cast<int>(masks.size()), "object", Mask(h, w)};
    for (std::size_t p : components[i]) object.mask.bits[p] = 1;
    masks.push_back(std::move(object));
  }
  return masks;
}

}  // namespace

std::optional<DetectionMode> parse_detection_mode(std::string_view text) {
  if (text == "oracle") return DetectionMode::kOracle;
  if (text == "heuristic") return DetectionMode::kHeuristic;
  return std::nullopt;
}

std::vector<ObjectMask> detect_objects(const Image& image, DetectionMode mode,
                                       std::optional<std::span<const ObjectMask>> oracle_masks) {
  if (mode == DetectionMode::kOracle) {
    if (!oracle_masks) throw std::invalid_argument("oracle detection requires masks");
    std::vector<ObjectMask> masks(oracle_masks->begin(), oracle_masks->end());
    for (std::size_t i = 0; i < masks.size(); ++i) {
      if (masks[i].mask.height != image.height || masks[i].mask.width != image.width) {
        throw std::invalid_argument("oracle mask " + std::to_string(i) + " does not match the image size");
      }
      masks[i].id = static_cast<int>(i);
    }
    return masks;
  }
  if (image.empty()) return {};
  return heuristic_masks(image);
}

std::array<double, kBlurKernelSize> gaussian_taps() {
  std::array<double, kBlurKernelSize> taps{};
  constexpr int radius = kBlurKernelSize / 2;
  double total = 0.0;
  for (int i = 0; i < kBlurKernelSize; ++i) {
    const double d = i - radius;
    taps[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kBlurVariance));
    total += taps[static_cast<std::size_t>(i)];
  }
  for (double& t : taps) t /= total;
  return taps;
}

std::array<double, kBlurKernelSize * kBlurKernelSize> gaussian_kernel() {
  const auto taps = gaussian_taps();
  std::array<double, kBlurKernelSize * kBlurKernelSize> kernel{};
  for (int y = 0; y < kBlurKernelSize; ++y) {
    for (int x = 0; x < kBlurKernelSize; ++x) {
      kernel[static_cast<std::size_t>(y * kBlurKernelSize + x)] = taps[static_cast<std::size_t>(y)] * taps[static_cast<std::size_t>(x)];
    }
  }
  return kernel;
}

Image gaussian_blur(const Image& image) {
  const auto taps = gaussian_taps();
  constexpr int radius = kBlurKernelSize / 2;
  const int h = image.height;
  const int w = image.width;
  std::vector<double> rows(image.data.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += taps[static_cast<std::size_t>(k + radius)] * image.at(y, reflect(x + k, w), c);
        rows[image.index(y, x, c)] = acc;
      }
    }
  }
  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += taps[static_cast<std::size_t>(k + radius)] * rows[image.index(reflect(y + k, h), x, c)];
        }
        out.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

SubImage blur_subimage(const Image& image, const Image& blurred, const ObjectMask& object) {
  if (object.mask.height != image.height || object.mask.width != image.width ||
      blurred.height != image.height || blurred.width != image.width) {
    throw std::invalid_argument("blur_subimage: mask and image sizes differ");
  }
  SubImage sub{image, object.id};
  for (std::size_t p = 0; p < object.mask.bits.size(); ++p) {
    if (!object.mask.bits[p]) continue;
    for (int c = 0; c < 3; ++c) sub.image.data[p * 3 + c] = blurred.data[p * 3 + c];
  }
  return sub;
}

SubImage blur_subimage(const Image& image, const ObjectMask& object) {
  if (object.mask.none()) {
    if (object.mask.height != image.height || object.mask.width != image.width) {
      throw std::invalid_argument("blur_subimage: mask and image sizes differ");
    }
    return SubImage{image, object.id};
  }
  return blur_subimage(image, gaussian_blur(image), object);
}

}  // namespace declutter::segmentation
