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

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "declutter/image.hpp"

namespace declutter::segmentation {

enum class DetectionMode { kOracle, kHeuristic };

std::optional<DetectionMode> parse_detection_mode(std::string_view text);

/// Oracle mode returns the supplied masks unchanged apart from ids renumbered
/// 0..k-1. Heuristic mode clusters RGB values with k-means (k = 4), splits each
/// cluster into 4-connected components, drops the single largest component as
/// background and keeps the rest with area >= 0.5% of the image.
std::vector<ObjectMask> detect_objects(const Image& image, DetectionMode mode,
                                       std::optional<std::span<const ObjectMask>> oracle_masks = std::nullopt);

inline constexpr int kBlurKernelSize = 13;
inline constexpr double kBlurVariance = 1.0;

/// Normalised 1-D Gaussian taps; the 2-D kernel is their outer product.
std::array<double, kBlurKernelSize> gaussian_taps();

/// Normalised 13x13 Gaussian (variance 1), row-major.
std::array<double, kBlurKernelSize * kBlurKernelSize> gaussian_kernel();

/// Whole-image blur per channel with reflect padding (edge pixel not repeated).
Image gaussian_blur(const Image& image);

struct SubImage {
  Image image;
  int source_id = 0;
};

/// The image with the object's pixels replaced by their blurred values. Pixels
/// outside the mask are copied unchanged.
SubImage blur_subimage(const Image& image, const ObjectMask& object);

/// Same as `blur_subimage` but reuses a precomputed `gaussian_blur(image)`.
SubImage blur_subimage(const Image& image, const Image& blurred, const ObjectMask& object);

}  // namespace declutter::segmentation
