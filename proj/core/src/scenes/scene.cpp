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

#include "declutter/scenes/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "declutter/diff/init.hpp"

namespace declutter::scenes {
namespace {

using diff::Rng;
using diff::uniform;
using diff::uniform01;
using diff::uniform_int;
using Rgb = std::array<float, 3>;

Rgb hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0);
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

enum class Shape { kRect, kEllipse };

Mask rasterize(int side, Shape shape, double cx, double cy, double rx, double ry) {
  Mask mask(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double dx = (x + 0.5 - cx) / rx;
      const double dy = (y + 0.5 - cy) / ry;
      const bool inside = shape == Shape::kRect ? (std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0) : (dx * dx + dy * dy <= 1.0);
      mask.at(y, x) = inside ? 1 : 0;
    }
  }
  return mask;
}

// True when `candidate` touches `occupied` or any of its 8-neighbours.
bool collides(const Mask& candidate, const Mask& occupied) {
  const int side = candidate.height;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      if (!candidate.at(y, x)) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          if (yy >= 0 && yy < side && xx >= 0 && xx < side && occupied.at(yy, xx)) return true;
        }
      }
    }
  }
  return false;
}

void paint(Image& image, const Mask& mask, const Rgb& color, Rng& rng, double jitter) {
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (!mask.at(y, x)) continue;
      for (int c = 0; c < 3; ++c) {
        image.at(y, x, c) = std::clamp(color[c] + static_cast<float>(uniform(rng, -jitter, jitter)), 0.0f, 1.0f);
      }
    }
  }
}

// Pixel checkerboard of `color` and a darker tone of the same hue.
void paint_checker(Image& image, const Mask& mask, const Rgb& color, Rng& rng, double jitter) {
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (!mask.at(y, x)) continue;
      const float tone = (x + y) % 2 == 0 ? 1.0f : 0.25f;
      for (int c = 0; c < 3; ++c) {
        image.at(y, x, c) = std::clamp(color[c] * tone + static_cast<float>(uniform(rng, -jitter, jitter)), 0.0f, 1.0f);
      }
    }
  }
}

}  // namespace

SceneScores score_rule(int clutter_count, double clutter_area_fraction, bool subject_present) {
  SceneScores s;
  s.y_aes = std::clamp(0.9 - 0.15 * clutter_count - 0.5 * clutter_area_fraction, 0.0, 1.0);
  s.y_content = std::clamp(0.5 + 0.3 * (subject_present ? 1.0 : 0.0) - 0.2 * clutter_area_fraction, 0.0, 1.0);
  return s;
}

SceneScores rescore(const SceneSample& sample) {
  int clutter = 0;
  std::size_t area = 0;
  bool subject = false;
  for (std::size_t i = 0; i < sample.masks.size(); ++i) {
    if (sample.is_clutter[i]) {
      ++clutter;
      area += sample.masks[i].mask.area();
    } else {
      subject = true;
    }
  }
  const double fraction = static_cast<double>(area) / static_cast<double>(sample.image.pixel_count());
  return score_rule(clutter, fraction, subject);
}

SceneSample generate_scene(std::uint64_t seed, const SceneConfig& config) {
  if (config.max_objects < 1) throw std::invalid_argument("scene config: max_objects must be >= 1");
  if (config.side < 16) throw std::invalid_argument("scene config: side must be >= 16");
  const int side = config.side;
  Rng rng(seed);
  SceneSample sample;
  sample.seed = seed;
  sample.image = Image(side, side);

  const double bg_hue = uniform(rng, 0.0, 360.0);
  const Rgb c1 = hsv_to_rgb(bg_hue, uniform(rng, 0.1, 0.35), uniform(rng, 0.45, 0.8));
  const Rgb c2 = hsv_to_rgb(bg_hue + uniform(rng, -25.0, 25.0), uniform(rng, 0.1, 0.35), uniform(rng, 0.45, 0.8));
  const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double ux = std::cos(angle);
  const double uy = std::sin(angle);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double px = (x + 0.5) / side - 0.5;
      const double py = (y + 0.5) / side - 0.5;
      const double t = std::clamp((px * ux + py * uy) / std::sqrt(0.5) + 0.5, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        const double v = (1.0 - t) * c1[c] + t * c2[c] + uniform(rng, -0.02, 0.02);
        sample.image.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }

  Mask occupied(side, side);

  // Subject: large ellipse near the background hue.
  {
    const double rx = uniform(rng, 0.15, 0.26) * side;
    const double ry = uniform(rng, 0.15, 0.26) * side;
    const double cx = uniform(rng, rx + 2.0, side - rx - 2.0);
    const double cy = uniform(rng, ry + 2.0, side - ry - 2.0);
    Mask mask = rasterize(side, Shape::kEllipse, cx, cy, rx, ry);
    const Rgb color = hsv_to_rgb(bg_hue + uniform(rng, -30.0, 30.0), uniform(rng, 0.3, 0.5),
                                 uniform(rng, 0.0, 1.0) < 0.5 ? uniform(rng, 0.2, 0.35) : uniform(rng, 0.85, 0.95));
    paint(sample.image, mask, color, rng, 0.015);
    occupied = mask_union(occupied, mask);
    sample.masks.push_back(ObjectMask{0, "subject", std::move(mask)});
    sample.is_clutter.push_back(false);
  }

  const int wanted = uniform_int(rng, 0, std::min(4, config.max_objects - 1));
  for (int i = 0; i < wanted; ++i) {
    const Shape shape = uniform01(rng) < 0.5 ? Shape::kRect : Shape::kEllipse;
    const double rx = uniform(rng, 0.03, 0.08) * side;
    const double ry = uniform(rng, 0.03, 0.08) * side;
    const Rgb color = hsv_to_rgb(bg_hue + 180.0 + uniform(rng, -40.0, 40.0), uniform(rng, 0.85, 1.0),
                                 uniform(rng, 0.85, 1.0));
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double cx = uniform(rng, rx, side - rx);
      const double cy = uniform(rng, ry, side - ry);
      Mask mask = rasterize(side, shape, cx, cy, rx, ry);
      if (mask.none() || collides(mask, occupied)) continue;
      paint_checker(sample.image, mask, color, rng, 0.01);
      occupied = mask_union(occupied, mask);
      sample.masks.push_back(ObjectMask{static_cast<int>(sample.masks.size()), "clutter", std::move(mask)});
      sample.is_clutter.push_back(true);
      break;
    }
  }

  const SceneScores scores = rescore(sample);
  sample.y_aes = scores.y_aes;
  sample.y_content = scores.y_content;
  return sample;
}

Image generate_texture(std::uint64_t seed, int side) {
  Rng rng(seed ^ 0x7e57u);
  Image image(side, side);
  Rgb a;
  Rgb b;
  Rgb wave;
  for (int c = 0; c < 3; ++c) {
    a[c] = static_cast<float>(uniform(rng, 0.05, 0.95));
    b[c] = static_cast<float>(uniform(rng, 0.05, 0.95));
    wave[c] = static_cast<float>(uniform(rng, -0.08, 0.08));
  }
  const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double freq = uniform(rng, 0.5, 2.0);
  const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double wx = std::cos(angle + 1.3);
  const double wy = std::sin(angle + 1.3);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double px = (x + 0.5) / side - 0.5;
      const double py = (y + 0.5) / side - 0.5;
      const double t = std::clamp((px * std::cos(angle) + py * std::sin(angle)) / std::sqrt(0.5) + 0.5, 0.0, 1.0);
      const double s = std::sin(2.0 * std::numbers::pi * freq * (px * wx + py * wy) + phase);
      for (int c = 0; c < 3; ++c) {
        image.at(y, x, c) = static_cast<float>(std::clamp((1.0 - t) * a[c] + t * b[c] + wave[c] * s, 0.0, 1.0));
      }
    }
  }
  return image;
}

void export_corpus(const std::filesystem::path& dir, std::span<const SceneSample> scenes) {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["version"] = 1;
  index["scenes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const SceneSample& s = scenes[i];
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05zu.png", i);
    write_png(dir / name, s.image);
    nlohmann::json objects = nlohmann::json::array();
    for (std::size_t k = 0; k < s.masks.size(); ++k) {
      objects.push_back({{"id", s.masks[k].id},
                         {"label", s.masks[k].label},
                         {"is_clutter", static_cast<bool>(s.is_clutter[k])},
                         {"mask", mask_to_rle(s.masks[k].mask)}});
    }
    index["scenes"].push_back({{"file", name},
                               {"seed", s.seed},
                               {"y_aes", s.y_aes},
                               {"y_content", s.y_content},
                               {"objects", std::move(objects)}});
  }
  std::ofstream out(dir / "index.json", std::ios::trunc);
  if (!out) throw ImageError("cannot write " + (dir / "index.json").string());
  out << index.dump(1) << '\n';
}

}  // namespace declutter::scenes
