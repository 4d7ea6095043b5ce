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

#include "declutter/inpaint/inpaint.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "declutter/diff/evaluate.hpp"

namespace declutter::inpaint {
namespace {

void check_same_shape(const Image& image, const Mask& mask, const char* what) {
  if (image.height != mask.height || image.width != mask.width) {
    throw std::invalid_argument(std::string(what) + ": image is " + std::to_string(image.height) + "x" +
                                std::to_string(image.width) + " but mask is " + std::to_string(mask.height) + "x" +
                                std::to_string(mask.width));
  }
}

int round_up(int v, int m) { return (v + m - 1) / m * m; }

Image pad_edge(const Image& image, int height, int width) {
  Image out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(y, image.height - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(x, image.width - 1);
      for (int c = 0; c < Image::kChannels; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return out;
}

Mask pad_zero(const Mask& mask, int height, int width) {
  Mask out(height, width);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) out.at(y, x) = mask.at(y, x);
  }
  return out;
}

Image crop(const Image& image, int height, int width) {
  Image out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) out.at(y, x, c) = image.at(y, x, c);
    }
  }
  return out;
}

Mask crop(const Mask& mask, int height, int width) {
  Mask out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(y, x) = mask.at(y, x);
  }
  return out;
}

ArtifactMap crop(const ArtifactMap& map, int height, int width) {
  ArtifactMap out{height, width, {}};
  out.values.reserve(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.values.push_back(map.values[static_cast<std::size_t>(y) * map.width + x]);
  }
  return out;
}

}  // namespace

CorruptedImage corrupt(const Image& image, const Mask& mask) {
  check_same_shape(image, mask, "corrupt");
  CorruptedImage out{image, mask};
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (!mask.bits[i]) continue;
    for (int c = 0; c < Image::kChannels; ++c) out.p_c.data[i * Image::kChannels + c] = 0.0f;
  }
  return out;
}

Generation generate(const InpainterModel& model, const CorruptedImage& corrupted) {
  const Image& p_c = corrupted.p_c;
  check_same_shape(p_c, corrupted.m_c, "generate");
  if (p_c.height <= 0 || p_c.width <= 0 || p_c.height % kEncoderStride != 0 || p_c.width % kEncoderStride != 0) {
    throw std::invalid_argument("generate: image sides must be positive multiples of " +
                                std::to_string(kEncoderStride) + ", got " + std::to_string(p_c.height) + "x" +
                                std::to_string(p_c.width));
  }
  diff::Graph graph;
  const GeneratorNodes nodes = build_generator(graph, graph.input("corrupted"));

  const diff::Tensor rgb = image_to_chw(p_c);
  const diff::Tensor hole = mask_to_tensor(corrupted.m_c);
  std::vector<float> stacked(rgb.storage().begin(), rgb.storage().end());
  stacked.insert(stacked.end(), hole.storage().begin(), hole.storage().end());
  diff::TensorMap inputs;
  inputs.emplace("corrupted", diff::Tensor({kGeneratorInputChannels, p_c.height, p_c.width}, std::move(stacked)));

  const auto eval = diff::forward(graph, inputs, model.params());
  Generation out;
  out.y = image_from_chw(eval.value(nodes.y));
  out.b = {p_c.height, p_c.width, {eval.value(nodes.b).storage().begin(), eval.value(nodes.b).storage().end()}};
  return out;
}

Image composite(const Image& p, const Image& y, const Mask& m) {
  check_same_shape(p, m, "composite");
  check_same_shape(y, m, "composite");
  Image out = p;
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    if (!m.bits[i]) continue;
    for (int c = 0; c < Image::kChannels; ++c) {
      out.data[i * Image::kChannels + c] = y.data[i * Image::kChannels + c];
    }
  }
  return out;
}

std::string_view fidelity_name(Fidelity fidelity) { return fidelity == Fidelity::kCapture ? "capture" : "high"; }

Fidelity parse_fidelity(std::string_view text) {
  if (text == "capture") return Fidelity::kCapture;
  if (text == "high") return Fidelity::kHigh;
  throw std::invalid_argument("unknown fidelity '" + std::string(text) + "' (expected capture or high)");
}

int max_iterations(Fidelity fidelity) { return fidelity == Fidelity::kCapture ? 3 : 10; }

InpaintResult iterative_inpaint(const InpainterModel& model, const Image& image, const Mask& mask, int max_iters,
                                double threshold, bool keep_trace) {
  check_same_shape(image, mask, "iterative_inpaint");
  if (max_iters < 1) throw std::invalid_argument("iterative_inpaint: max_iters must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("iterative_inpaint: threshold must lie in [0, 1]");
  }
  InpaintResult result;
  result.image = image;
  if (mask.none()) return result;

  const int ph = round_up(image.height, kEncoderStride);
  const int pw = round_up(image.width, kEncoderStride);
  Image current = pad_edge(image, ph, pw);
  Mask remaining = pad_zero(mask, ph, pw);

  while (true) {
    Generation gen = generate(model, corrupt(current, remaining));
    ++result.iterations;
    Mask rejected(ph, pw);
    for (std::size_t i = 0; i < remaining.bits.size(); ++i) {
      if (!remaining.bits[i]) continue;
      if (gen.b.values[i] > threshold) rejected.bits[i] = 1;
    }
    const bool last = rejected.none() || result.iterations == max_iters;
    // On the last pass every remaining pixel is accepted.
    for (std::size_t i = 0; i < remaining.bits.size(); ++i) {
      if (!remaining.bits[i] || (rejected.bits[i] && !last)) continue;
      for (int c = 0; c < Image::kChannels; ++c) {
        current.data[i * Image::kChannels + c] = gen.y.data[i * Image::kChannels + c];
      }
    }
    if (keep_trace) {
      const int h = image.height;
      const int w = image.width;
      result.trace.push_back({crop(current, h, w), last ? Mask(h, w) : crop(rejected, h, w), crop(gen.b, h, w),
                              crop(gen.y, h, w), result.iterations});
    }
    if (last) break;
    remaining = std::move(rejected);
  }

  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (!mask.at(y, x)) continue;
      for (int c = 0; c < Image::kChannels; ++c) result.image.at(y, x, c) = current.at(y, x, c);
    }
  }
  return result;
}

void dump_trace(const std::filesystem::path& dir, const InpaintResult& result) {
  std::filesystem::create_directories(dir);
  for (const auto& state : result.trace) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "iter_%02d_", state.iteration);
    write_png(dir / (std::string(stem) + "y.png"), state.y);
    write_file(dir / (std::string(stem) + "b.png"), encode_gray_png(state.b.values, state.b.height, state.b.width));
    write_file(dir / (std::string(stem) + "remaining.png"), encode_mask_png(state.remaining));
  }
  write_png(dir / "result.png", result.image);
}

double masked_l1(const InpainterModel& model, const std::vector<Image>& images, const std::vector<Mask>& masks) {
  if (images.size() != masks.size() || images.empty()) {
    throw std::invalid_argument("masked_l1: need equally many images and masks, at least one");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Mask& m = masks[n];
    if (m.none()) throw std::invalid_argument("masked_l1: empty mask");
    const Generation gen = generate(model, corrupt(images[n], m));
    double sum = 0.0;
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
      if (!m.bits[i]) continue;
      for (int c = 0; c < Image::kChannels; ++c) {
        const std::size_t k = i * Image::kChannels + c;
        sum += std::abs(static_cast<double>(gen.y.data[k]) - images[n].data[k]);
      }
    }
    total += sum / (static_cast<double>(m.area()) * Image::kChannels);
  }
  return total / static_cast<double>(images.size());
}

}  // namespace declutter::inpaint
