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

// Fixed-seed fixtures shared by the unit tests and the golden writer.

#include <vector>

#include "declutter/decomposer/model.hpp"
#include "declutter/diff/graph.hpp"
#include "declutter/diff/init.hpp"
#include "declutter/image.hpp"
#include "declutter/inpaint/model.hpp"
#include "declutter/scenes/scene.hpp"
#include "support.hpp"

namespace declutter::testing {

/// conv(2->4, 3x3) -> relu -> flatten -> fc(144->5) -> sigmoid on a [2,6,6] input.
struct ThreeLayerFixture {
  diff::Graph graph;
  diff::NodeId out = 0;
  diff::TensorMap inputs;
  diff::TensorMap params;
};

inline ThreeLayerFixture three_layer_fixture() {
  ThreeLayerFixture f;
  diff::Rng rng(20240601);
  diff::add_conv_params(f.params, "conv", 4, 2, 3, rng);
  diff::add_fc_params(f.params, "fc", 5, 4 * 6 * 6, rng);
  f.params["conv.b"] = random_tensor({4}, rng, -0.1, 0.1);
  f.params["fc.b"] = random_tensor({5}, rng, -0.1, 0.1);
  f.inputs.emplace("x", random_tensor({2, 6, 6}, rng));
  auto& g = f.graph;
  auto h = g.relu(g.conv2d(g.input("x"), g.param("conv.w"), g.param("conv.b")));
  f.out = g.sigmoid(g.fully_connected(g.flatten(h), g.param("fc.w"), g.param("fc.b")));
  g.set_output("y", f.out);
  return f;
}

inline constexpr std::uint64_t kDecomposerSeed = 424242;
inline constexpr std::uint64_t kInpainterSeed = 515151;
inline constexpr std::uint64_t kSceneSeed = 777;

/// A generated scene with exactly three objects.
inline scenes::SceneSample three_object_scene() {
  for (std::uint64_t seed = kSceneSeed;; ++seed) {
    auto s = scenes::generate_scene(seed);
    if (s.masks.size() == 3) return s;
  }
}

/// 16x16 image with a 5x4 hole for generator goldens.
inline Image inpaint_fixture_image() {
  diff::Rng rng(99);
  return random_image(16, 16, rng);
}
inline Mask inpaint_fixture_mask() { return box_mask(16, 16, 5, 6, 5, 4); }

}  // namespace declutter::testing
