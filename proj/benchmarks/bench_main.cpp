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

#include <benchmark/benchmark.h>

#include "declutter/decomposer/analysis.hpp"
#include "declutter/decomposer/model.hpp"
#include "declutter/diff/evaluate.hpp"
#include "declutter/diff/graph.hpp"
#include "declutter/diff/init.hpp"
#include "declutter/inpaint/inpaint.hpp"
#include "declutter/inpaint/model.hpp"
#include "declutter/inpaint/train.hpp"
#include "declutter/scenes/scene.hpp"
#include "declutter/segmentation/segmentation.hpp"

namespace {

using namespace declutter;

diff::Tensor random_tensor(const diff::Shape& dims, diff::Rng& rng) {
  diff::Tensor t(dims);
  for (float& v : t.values()) v = static_cast<float>(diff::uniform(rng, -1.0, 1.0));
  return t;
}

// 3x3 convolution, C -> C channels on a side x side map; args {side, channels, stride}.
void BM_Conv2dForwardBackward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int channels = static_cast<int>(state.range(1));
  diff::Rng rng(1);
  diff::Graph g;
  const auto y = g.conv2d(g.input("x"), g.param("conv.w"), g.param("conv.b"), {static_cast<int>(state.range(2))});
  const auto loss = g.mean(y);
  diff::TensorMap params;
  diff::add_conv_params(params, "conv", channels, channels, 3, rng);
  diff::TensorMap inputs;
  inputs.emplace("x", random_tensor({channels, side, side}, rng));
  for (auto _ : state) {
    const auto eval = diff::forward(g, inputs, params);
    benchmark::DoNotOptimize(diff::backward(eval, loss));
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({32, 16, 1})->Args({64, 16, 1})->Args({64, 32, 2})->Unit(benchmark::kMillisecond);

void BM_GaussianBlur(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Image image = scenes::generate_texture(3, side);
  for (auto _ : state) benchmark::DoNotOptimize(segmentation::gaussian_blur(image));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_GaussianBlur)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Contribution(benchmark::State& state) {
  const auto model = decomposer::DecomposerModel::create(64, 1);
  scenes::SceneSample scene;
  for (std::uint64_t seed = 1;; ++seed) {
    scene = scenes::generate_scene(seed);
    if (scene.masks.size() == static_cast<std::size_t>(state.range(0))) break;
  }
  for (auto _ : state) benchmark::DoNotOptimize(decomposer::contribution(model, scene.image, scene.masks));
}
BENCHMARK(BM_Contribution)->Arg(1)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto model = inpaint::InpainterModel::create(1);
  diff::Rng rng(2);
  const auto corrupted =
      inpaint::corrupt(scenes::generate_texture(4, side), inpaint::random_strokes(side, side, rng));
  for (auto _ : state) benchmark::DoNotOptimize(inpaint::generate(model, corrupted));
}
BENCHMARK(BM_Generate)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_IterativeInpaint(benchmark::State& state) {
  const auto model = inpaint::InpainterModel::create(1);
  diff::Rng rng(2);
  const Image image = scenes::generate_texture(5, 64);
  const Mask mask = inpaint::random_strokes(64, 64, rng);
  const int iters = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(inpaint::iterative_inpaint(model, image, mask, iters, 0.0));
}
BENCHMARK(BM_IterativeInpaint)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
