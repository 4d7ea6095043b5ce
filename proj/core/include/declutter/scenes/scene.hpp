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
#include <span>
#include <vector>

#include "declutter/image.hpp"

namespace declutter::scenes {

struct SceneConfig {
  int side = 64;
  /// Upper bound on subject + clutter objects; at least 1.
  int max_objects = 5;
};

/// A procedurally generated photo with planted clutter and exact ground truth.
struct SceneSample {
  Image image;
  std::vector<ObjectMask> masks;  // masks[0] is the subject
  std::vector<bool> is_clutter;
  double y_aes = 0.0;
  double y_content = 0.0;
  std::uint64_t seed = 0;
};

struct SceneScores {
  double y_aes = 0.0;
  double y_content = 0.0;
};

/// Ground-truth scoring rule:
///   y_aes     = clamp(0.9 - 0.15 n - 0.5 a, 0, 1)
///   y_content = clamp(0.5 + 0.3 [subject] - 0.2 a, 0, 1)
/// with n clutter objects covering a fraction a of the pixels.
SceneScores score_rule(int clutter_count, double clutter_area_fraction, bool subject_present);

/// Re-derives the scores of a sample from its masks and clutter flags.
SceneScores rescore(const SceneSample& sample);

/// Deterministic in (seed, config). Background is a smooth two-colour gradient with
/// low-amplitude noise; one large subject in a colour close to the background hue;
/// 0..4 small saturated clutter shapes in a clashing hue, painted as a pixel
/// checkerboard of two tones. Shapes that cannot be placed without overlap after
/// 100 attempts are dropped.
SceneSample generate_scene(std::uint64_t seed, const SceneConfig& config = {});

/// Smooth synthetic texture (gradient plus low-frequency waves) for inpainter training.
Image generate_texture(std::uint64_t seed, int side);

/// Writes scene_NNNNN.png files plus index.json (masks run-length encoded).
void export_corpus(const std::filesystem::path& dir, std::span<const SceneSample> scenes);

}  // namespace declutter::scenes
