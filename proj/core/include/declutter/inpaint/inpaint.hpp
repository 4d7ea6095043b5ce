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

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "declutter/image.hpp"
#include "declutter/inpaint/model.hpp"

namespace declutter::inpaint {

struct CorruptedImage {
  Image p_c;  // masked pixels zeroed
  Mask m_c;
};

/// Per-pixel artifact probability, row-major.
struct ArtifactMap {
  int height = 0;
  int width = 0;
  std::vector<float> values;
};

struct Generation {
  Image y;
  ArtifactMap b;
};

/// Throws std::invalid_argument on a shape mismatch.
CorruptedImage corrupt(const Image& image, const Mask& mask);

/// Single generator pass. Throws std::invalid_argument unless both sides are
/// multiples of kEncoderStride. Deterministic.
Generation generate(const InpainterModel& model, const CorruptedImage& corrupted);

/// p outside m, y inside m.
Image composite(const Image& p, const Image& y, const Mask& m);

enum class Fidelity { kCapture, kHigh };
std::string_view fidelity_name(Fidelity fidelity);
/// Accepts "capture" and "high"; throws std::invalid_argument otherwise.
Fidelity parse_fidelity(std::string_view text);
/// 3 for capture, 10 for high.
int max_iterations(Fidelity fidelity);

inline constexpr double kDefaultThreshold = 0.5;

struct InpaintState {
  Image current;
  Mask remaining;  // after this iteration's acceptance
  ArtifactMap b;
  Image y;
  int iteration = 0;  // 1-based
};

struct InpaintResult {
  Image image;
  int iterations = 0;
  std::vector<InpaintState> trace;  // filled when requested
};

/// Generate, accept pixels with b <= threshold, re-inpaint the rest, until the
/// remaining hole is empty or `max_iters` passes have run; leftovers are then
/// taken from the final y. Images whose sides are not multiples of the encoder
/// stride are edge-padded internally. Pixels outside `mask` are returned
/// bit-identical to the input.
InpaintResult iterative_inpaint(const InpainterModel& model, const Image& image, const Mask& mask, int max_iters,
                                double threshold = kDefaultThreshold, bool keep_trace = false);

/// Writes iter_NN_y.png, iter_NN_b.png and iter_NN_remaining.png per traced
/// iteration, plus result.png.
void dump_trace(const std::filesystem::path& dir, const InpaintResult& result);

/// Mean |y - p| over masked pixels and channels after one generator pass,
/// averaged over images. Masks must be non-empty.
double masked_l1(const InpainterModel& model, const std::vector<Image>& images, const std::vector<Mask>& masks);

}  // namespace declutter::inpaint
