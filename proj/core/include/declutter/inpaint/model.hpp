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
#include <cstdint>
#include <filesystem>

#include "declutter/diff/graph.hpp"
#include "declutter/diff/tensor.hpp"

namespace declutter::inpaint {

/// Generator encoder: six 3x3 convs {48,48,96,96,192,192}, stride 2 on the even
/// layers. Decoder: seven 3x3 convs {192,192,96,96,48,24,3}; the even layers
/// upsample x2 first, so the output is back at input resolution. The artifact
/// branch is a 3x3 conv to one channel off the 24-channel penultimate decoder
/// features. Both heads end in a sigmoid.
///
/// Discriminator: four stride-2 3x3 convs {32,64,128,1}, spatial mean, sigmoid.
inline constexpr std::array<int, 6> kEncoderChannels{48, 48, 96, 96, 192, 192};
inline constexpr std::array<int, 7> kDecoderChannels{192, 192, 96, 96, 48, 24, 3};
inline constexpr std::array<int, 4> kDiscriminatorChannels{32, 64, 128, 1};
inline constexpr int kGeneratorInputChannels = 4;  // corrupted RGB + hole mask
inline constexpr int kEncoderStride = 8;

/// Parameters named `gen.*`, `artifact.*` and `disc.*`.
class InpainterModel {
 public:
  static InpainterModel create(std::uint64_t seed);
  /// Every parameter zero: y and b are 0.5 everywhere.
  static InpainterModel zeros();
  static InpainterModel from_params(diff::TensorMap params);
  static InpainterModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const diff::TensorMap& params() const { return params_; }
  diff::TensorMap& params() { return params_; }

 private:
  explicit InpainterModel(diff::TensorMap params) : params_(std::move(params)) {}
  diff::TensorMap params_;
};

struct GeneratorNodes {
  diff::NodeId y;  // [3,H,W]
  diff::NodeId b;  // [1,H,W]
};

/// `input` is [4,H,W]: the corrupted image and the hole mask.
GeneratorNodes build_generator(diff::Graph& graph, diff::NodeId input);

/// Probability that `image` ([3,H,W]) is real, shape [1].
diff::NodeId build_discriminator(diff::Graph& graph, diff::NodeId image);

}  // namespace declutter::inpaint
