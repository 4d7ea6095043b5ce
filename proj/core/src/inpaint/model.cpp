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

#include "declutter/inpaint/model.hpp"

#include <string>

#include "declutter/diff/checkpoint.hpp"
#include "declutter/diff/init.hpp"

namespace declutter::inpaint {
namespace {

using diff::Graph;
using diff::NodeId;

std::string enc(std::size_t i) { return "gen.enc" + std::to_string(i + 1); }
std::string dec(std::size_t i) { return "gen.dec" + std::to_string(i + 1); }
std::string disc(std::size_t i) { return "disc.conv" + std::to_string(i + 1); }

NodeId conv(Graph& g, NodeId x, const std::string& prefix, int stride, int upsample = 1) {
  return g.conv2d(x, g.param(prefix + ".w"), g.param(prefix + ".b"), {stride, diff::Padding::kSame, upsample});
}

diff::TensorMap make_params(std::uint64_t seed) {
  diff::Rng rng(seed);
  diff::TensorMap params;
  int in = kGeneratorInputChannels;
  for (std::size_t i = 0; i < kEncoderChannels.size(); ++i) {
    diff::add_conv_params(params, enc(i), kEncoderChannels[i], in, 3, rng, diff::WeightInit::kHe);
    in = kEncoderChannels[i];
  }
  for (std::size_t i = 0; i < kDecoderChannels.size(); ++i) {
    const bool hidden = i + 1 < kDecoderChannels.size();
    diff::add_conv_params(params, dec(i), kDecoderChannels[i], in, 3, rng,
                          hidden ? diff::WeightInit::kHe : diff::WeightInit::kGlorot);
    in = kDecoderChannels[i];
  }
  diff::add_conv_params(params, "artifact.conv", 1, kDecoderChannels[5], 3, rng);
  in = 3;
  for (std::size_t i = 0; i < kDiscriminatorChannels.size(); ++i) {
    const bool hidden = i + 1 < kDiscriminatorChannels.size();
    diff::add_conv_params(params, disc(i), kDiscriminatorChannels[i], in, 3, rng,
                          hidden ? diff::WeightInit::kHe : diff::WeightInit::kGlorot);
    in = kDiscriminatorChannels[i];
  }
  return params;
}

}  // namespace

InpainterModel InpainterModel::create(std::uint64_t seed) { return InpainterModel(make_params(seed)); }

InpainterModel InpainterModel::zeros() {
  auto params = make_params(0);
  for (auto& [name, t] : params) t.fill(0.0f);
  return InpainterModel(std::move(params));
}

InpainterModel InpainterModel::from_params(diff::TensorMap params) {
  const auto expected = make_params(0);
  for (const auto& [name, t] : expected) {
    auto it = params.find(name);
    if (it == params.end()) throw diff::Error("inpainter checkpoint lacks " + name);
    if (it->second.dims() != t.dims()) {
      throw diff::Error("inpainter parameter " + name + " has shape " + diff::shape_string(it->second.dims()) +
                        ", expected " + diff::shape_string(t.dims()));
    }
  }
  if (params.size() != expected.size()) throw diff::Error("inpainter checkpoint has unexpected tensors");
  return InpainterModel(std::move(params));
}

InpainterModel InpainterModel::load(const std::filesystem::path& path) {
  return from_params(diff::load_checkpoint(path));
}

void InpainterModel::save(const std::filesystem::path& path) const { diff::save_checkpoint(path, params_); }

GeneratorNodes build_generator(Graph& graph, NodeId input) {
  NodeId x = input;
  for (std::size_t i = 0; i < kEncoderChannels.size(); ++i) {
    x = graph.relu(conv(graph, x, enc(i), i % 2 == 1 ? 2 : 1));
  }
  for (std::size_t i = 0; i + 1 < kDecoderChannels.size(); ++i) {
    x = graph.relu(conv(graph, x, dec(i), 1, i % 2 == 1 ? 2 : 1));
  }
  const NodeId y = graph.sigmoid(conv(graph, x, dec(kDecoderChannels.size() - 1), 1));
  const NodeId b = graph.sigmoid(conv(graph, x, "artifact.conv", 1));
  return {y, b};
}

NodeId build_discriminator(Graph& graph, NodeId image) {
  NodeId x = image;
  for (std::size_t i = 0; i < kDiscriminatorChannels.size(); ++i) {
    x = conv(graph, x, disc(i), 2);
    if (i + 1 < kDiscriminatorChannels.size()) x = graph.relu(x);
  }
  return graph.sigmoid(graph.mean(x));
}

}  // namespace declutter::inpaint
