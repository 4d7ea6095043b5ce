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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "declutter/image.hpp"
#include "declutter/scenes/scene.hpp"

namespace declutter::scenes {

enum class Split : std::uint8_t { kTrain, kVal, kTest };

std::string_view split_name(Split split);

struct DatasetSample {
  std::string image_path;     // empty for in-memory samples
  std::optional<Image> image;  // loaded lazily from image_path when absent
  double y_aes = 0.0;
  double y_content = 0.0;
  std::optional<std::vector<ObjectMask>> masks;
  std::vector<bool> is_clutter;  // planted ground truth when known
  Split split = Split::kTrain;
};

struct Dataset {
  std::vector<DatasetSample> samples;
  std::vector<std::string> missing_files;

  std::vector<std::size_t> indices(Split split) const;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads UTF-8 rows `image_path<TAB>y_aes<TAB>y_content[<TAB>masks.json]`. Relative
/// paths resolve against the manifest's directory. A score column with any value
/// outside [0, 1] is min-max normalised onto [0, 1]. Rows whose image is missing are
/// dropped and listed in `missing_files`. Malformed rows throw naming the line.
Dataset load_manifest(const std::filesystem::path& path);

/// Reads a corpus written by `export_corpus`.
Dataset load_corpus(const std::filesystem::path& dir);

Dataset dataset_from_scenes(std::span<const SceneSample> scenes);

/// Retags every sample: a seeded shuffle assigns `val_fraction` to val,
/// `test_fraction` to test and the rest to train.
void assign_splits(Dataset& dataset, double val_fraction, double test_fraction, std::uint64_t seed);

/// The sample's pixels, reading the file if needed.
Image sample_image(const DatasetSample& sample);

/// Bilinear resize to side x side with corner-aligned sampling; values stay in [0, 1].
Image preprocess(const Image& image, int side);

/// Masks from a JSON array of RLE masks or {"label", "mask" or "mask_rle"} entries, or from an
/// object holding such an array under "objects". Ids are renumbered 0..k-1.
/// Throws nlohmann::json::exception or ImageError on malformed input.
std::vector<ObjectMask> masks_from_json(const nlohmann::json& doc);

/// Loads a JSON array of {"label", "mask": rle} objects (or bare rle masks).
std::vector<ObjectMask> load_masks_json(const std::filesystem::path& path);

}  // namespace declutter::scenes
