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

#include "declutter/scenes/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "declutter/diff/init.hpp"

namespace declutter::scenes {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

double parse_score(const std::string& text, std::size_t line_no, std::string_view column) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw DatasetError("manifest line " + std::to_string(line_no) + ": bad " + std::string(column) + " value '" +
                       text + "'");
  }
  return value;
}

void normalize_column(std::vector<DatasetSample>& samples, double DatasetSample::*field) {
  if (samples.empty()) return;
  auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end(),
                                            [&](const auto& a, const auto& b) { return a.*field < b.*field; });
  const double lo = (*lo_it).*field;
  const double hi = (*hi_it).*field;
  if (lo >= 0.0 && hi <= 1.0) return;
  for (auto& s : samples) s.*field = hi > lo ? (s.*field - lo) / (hi - lo) : 0.0;
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == split) out.push_back(i);
  }
  return out;
}

std::vector<ObjectMask> masks_from_json(const nlohmann::json& doc) {
  const nlohmann::json& array = doc.is_object() ? doc.at("objects") : doc;
  if (!array.is_array()) throw nlohmann::json::type_error::create(302, "masks must be an array", &doc);
  std::vector<ObjectMask> masks;
  for (const auto& item : array) {
    ObjectMask object;
    object.id = static_cast<int>(masks.size());
    if (item.contains("mask") || item.contains("mask_rle")) {
      object.label = item.value("label", "object");
      object.mask = mask_from_rle(item.contains("mask") ? item.at("mask") : item.at("mask_rle"));
    } else {
      object.label = "object";
      object.mask = mask_from_rle(item);
    }
    masks.push_back(std::move(object));
  }
  return masks;
}

std::vector<ObjectMask> load_masks_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open masks file " + path.string());
  try {
    return masks_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("malformed masks file " + path.string() + ": " + e.what());
  }
}

Dataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  Dataset dataset;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 && fields.size() != 4) {
      throw DatasetError("manifest line " + std::to_string(line_no) + ": expected 3 or 4 tab-separated fields, got " +
                         std::to_string(fields.size()));
    }
    DatasetSample sample;
    std::filesystem::path image_path = fields[0];
    if (image_path.is_relative()) image_path = base / image_path;
    sample.image_path = image_path.string();
    sample.y_aes = parse_score(fields[1], line_no, "y_aes");
    sample.y_content = parse_score(fields[2], line_no, "y_content");
    if (!std::filesystem::exists(image_path)) {
      dataset.missing_files.push_back(sample.image_path);
      continue;
    }
    if (fields.size() == 4 && !fields[3].empty()) {
      std::filesystem::path masks_path = fields[3];
      if (masks_path.is_relative()) masks_path = base / masks_path;
      sample.masks = load_masks_json(masks_path);
    }
    dataset.samples.push_back(std::move(sample));
  }
  normalize_column(dataset.samples, &DatasetSample::y_aes);
  normalize_column(dataset.samples, &DatasetSample::y_content);
  return dataset;
}

Dataset load_corpus(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw DatasetError("cannot open " + (dir / "index.json").string());
  Dataset dataset;
  try {
    const auto index = nlohmann::json::parse(in);
    for (const auto& scene : index.at("scenes")) {
      DatasetSample sample;
      sample.image_path = (dir / scene.at("file").get<std::string>()).string();
      sample.y_aes = scene.at("y_aes").get<double>();
      sample.y_content = scene.at("y_content").get<double>();
      std::vector<ObjectMask> masks;
      for (const auto& object : scene.at("objects")) {
        masks.push_back(ObjectMask{object.at("id").get<int>(), object.at("label").get<std::string>(),
                                   mask_from_rle(object.at("mask"))});
        sample.is_clutter.push_back(object.at("is_clutter").get<bool>());
      }
      sample.masks = std::move(masks);
      if (scene.contains("split")) {
        const auto tag = scene.at("split").get<std::string>();
        sample.split = tag == "val" ? Split::kVal : tag == "test" ? Split::kTest : Split::kTrain;
      }
      if (!std::filesystem::exists(sample.image_path)) {
        dataset.missing_files.push_back(sample.image_path);
        continue;
      }
      dataset.samples.push_back(std::move(sample));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("malformed corpus index: " + std::string(e.what()));
  }
  return dataset;
}

Dataset dataset_from_scenes(std::span<const SceneSample> scenes) {
  Dataset dataset;
  for (const SceneSample& scene : scenes) {
    DatasetSample sample;
    sample.image = scene.image;
    sample.y_aes = scene.y_aes;
    sample.y_content = scene.y_content;
    sample.masks = scene.masks;
    sample.is_clutter = scene.is_clutter;
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

void assign_splits(Dataset& dataset, double val_fraction, double test_fraction, std::uint64_t seed) {
  const std::size_t n = dataset.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  diff::Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(diff::uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[j]);
  }
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n)));
  const auto n_test = std::min(n - n_val, static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n))));
  for (std::size_t k = 0; k < n; ++k) {
    Split split = Split::kTrain;
    if (k < n_val) {
      split = Split::kVal;
    } else if (k < n_val + n_test) {
      split = Split::kTest;
    }
    dataset.samples[order[k]].split = split;
  }
}

Image sample_image(const DatasetSample& sample) {
  if (sample.image) return *sample.image;
  if (sample.image_path.empty()) throw DatasetError("sample has neither pixels nor a path");
  return read_png(sample.image_path);
}

Image preprocess(const Image& image, int side) {
  if (image.empty()) throw ImageError("preprocess: empty image");
  if (side < 8) throw ImageError("preprocess: side must be >= 8");
  if (image.height == side && image.width == side) return image;
  Image out(side, side);
  const double sy = side > 1 ? static_cast<double>(image.height - 1) / (side - 1) : 0.0;
  const double sx = side > 1 ? static_cast<double>(image.width - 1) / (side - 1) : 0.0;
  for (int y = 0; y < side; ++y) {
    const double fy = y * sy;
    const int y0 = std::min(static_cast<int>(fy), image.height - 1);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < side; ++x) {
      const double fx = x * sx;
      const int x0 = std::min(static_cast<int>(fx), image.width - 1);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < Image::kChannels; ++c) {
        const double v = (1 - wy) * ((1 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c)) +
                         wy * ((1 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c));
        out.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

}  // namespace declutter::scenes
