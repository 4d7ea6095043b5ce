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
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "declutter/diff/init.hpp"
#include "declutter/diff/tensor.hpp"
#include "declutter/image.hpp"

namespace declutter::testing {

inline diff::Tensor random_tensor(const diff::Shape& dims, diff::Rng& rng, double lo = -1.0, double hi = 1.0) {
  diff::Tensor t(dims);
  for (float& v : t.values()) v = static_cast<float>(diff::uniform(rng, lo, hi));
  return t;
}

inline Image random_image(int h, int w, diff::Rng& rng) {
  Image img(h, w);
  for (float& v : img.data) v = static_cast<float>(diff::uniform01(rng));
  return img;
}

/// Rectangle [x0, x0 + w) x [y0, y0 + h).
inline Mask box_mask(int height, int width, int x0, int y0, int w, int h) {
  Mask m(height, width);
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) m.at(y, x) = 1;
  }
  return m;
}

inline Mask random_mask(int h, int w, diff::Rng& rng, double density = 0.3) {
  Mask m(h, w);
  for (auto& b : m.bits) b = diff::uniform01(rng) < density ? 1 : 0;
  return m;
}

inline std::filesystem::path golden_path(const std::string& name) {
  return std::filesystem::path(DECLUTTER_GOLDEN_DIR) / name;
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("declutter_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace declutter::testing
