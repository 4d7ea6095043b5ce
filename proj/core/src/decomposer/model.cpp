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

#include "declutter/decomposer/model.hpp"

#include <cmath>
#include <string>

#include "declutter/diff/checkpoint.hpp"
#include "declutter/diff/init.hpp"

namespace declutter::decomposer {
namespace {

using diff::Graph;
using diff::NodeId;

const char* const kFeatConv[] = {"feat.conv1", "feat.conv2", "feat.conv3", "feat.conv4"};
const char* const kScoreConv[] = {"score.conv1", "score.conv2"};

NodeId conv(Graph& g, NodeId x, const std::string& prefix, int stride) {
  return g.conv2d(x, g.param(prefix + ".w"), g.param(prefix + ".b"), {stride, diff::Padding::kSame, 1});
}

NodeId fc(Graph& g, NodeId x, const std::string& prefix) {
  return g.fully_connected(x, g.param(prefix + ".w"), g.param(prefix + ".b"));
}

NodeId score_head(Graph& g, NodeId flat, const std::string& prefix) {
  return g.sigmoid(fc(g, g.relu(fc(g, flat, prefix + ".fc1")), prefix + ".fc2"));
}

void add_all(diff::TensorMap& params, const Architecture& arch, diff::Rng& rng) {
  int in = 3;
  for (int i = 0; i < 4; ++i) {
    diff::add_conv_params(params, kFeatConv[i], arch.feature_channels[static_cast<std::size_t>(i)], in, 3, rng);
    in = arch.feature_channels[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < 2; ++i) {
    diff::add_conv_params(params, kScoreConv[i], arch.score_channels[static_cast<std::size_t>(i)], in, 3, rng);
    in = arch.score_channels[static_cast<std::size_t>(i)];
  }
  for (const char* head : {"score.aes", "score.content"}) {
    diff::add_fc_params(params, std::string(head) + ".fc1", arch.head_hidden, arch.score_flat_size(), rng);
    diff::add_fc_params(params, std::string(head) + ".fc2", 1, arch.head_hidden, rng);
  }
  diff::add_fc_params(params, "mix.fc1", arch.mix_hidden, arch.mix_input_size(), rng);
  diff::add_fc_params(params, "mix.beta", 1, arch.mix_hidden, rng);
  diff::add_fc_params(params, "mix.gamma", 1, arch.mix_hidden, rng);
}

void check_side(int side) {
  if (side < 16 || side % 16 != 0) {
    throw diff::Error("decomposer input side must be a positive multiple of 16, got " + std::to_string(side));
  }
}

}  // namespace

diff::TensorMap parameter_template(const Architecture& arch) {
  diff::TensorMap params;
  diff::Rng rng(0);
  add_all(params, arch, rng);
  return params;
}

DecomposerModel DecomposerModel::create(int side, std::uint64_t seed) {
  check_side(side);
  Architecture arch;
  arch.side = side;
  diff::TensorMap params;
  diff::Rng rng(seed);
  add_all(params, arch, rng);
  return DecomposerModel(arch, std::move(params));
}

DecomposerModel DecomposerModel::from_params(diff::TensorMap params) {
  auto it = params.find("mix.fc1.w");
  if (it == params.end() || it->second.rank() != 2) throw diff::Error("decomposer checkpoint lacks mix.fc1.w");
  Architecture arch;
  // mix input = 64 f^2 + (2 f)^2 = 68 f^2 with f = side / 16.
  const int in = it->second.dim(1);
  const int f = static_cast<int>(std::lround(std::sqrt(in / 68.0)));
  arch.side = 16 * f;
  check_side(arch.side);
  const auto expected = parameter_template(arch);
  for (const auto& [name, t] : expected) {
    auto found = params.find(name);
    if (found == params.end()) throw diff::Error("decomposer checkpoint lacks " + name);
    if (found->second.dims() != t.dims()) {
      throw diff::Error("decomposer parameter " + name + " has shape " + diff::shape_string(found->second.dims()) +
                        ", expected " + diff::shape_string(t.dims()));
    }
  }
  if (params.size() != expected.size()) throw diff::Error("decomposer checkpoint has unexpected tensors");
  return DecomposerModel(arch, std::move(params));
}

DecomposerModel DecomposerModel::load(const std::filesystem::path& path) {
  return from_params(diff::load_checkpoint(path));
}

void DecomposerModel::save(const std::filesystem::path& path) const { diff::save_checkpoint(path, params_); }

NodeId build_features(Graph& graph, NodeId image) {
  NodeId x = image;
  for (const char* name : kFeatConv) x = graph.relu(conv(graph, x, name, 2));
  return x;
}

ScoreNodes build_scores(Graph& graph, NodeId features) {
  NodeId x = features;
  for (const char* name : kScoreConv) x = graph.relu(conv(graph, x, name, 1));
  const NodeId flat = graph.flatten(x);
  return {score_head(graph, flat, "score.aes"), score_head(graph, flat, "score.content")};
}

LogitNodes build_mix_logits(Graph& graph, NodeId flat_image_features, NodeId mask_features) {
  const NodeId hidden = graph.relu(fc(graph, graph.concat({flat_image_features, mask_features}), "mix.fc1"));
  return {fc(graph, hidden, "mix.beta"), fc(graph, hidden, "mix.gamma")};
}

DecompositionGraph build_decomposition_graph(int k) {
  if (k < 1) throw diff::Error("decomposition needs at least one object");
  DecompositionGraph out;
  out.k = k;
  Graph& g = out.graph;
  const NodeId image_features = g.flatten(build_features(g, g.input("image")));

  std::vector<NodeId> aes;
  std::vector<NodeId> content;
  std::vector<NodeId> beta_logits;
  std::vector<NodeId> gamma_logits;
  for (int i = 0; i < k; ++i) {
    const std::string suffix = std::to_string(i);
    const ScoreNodes scores = build_scores(g, build_features(g, g.input("sub." + suffix)));
    aes.push_back(scores.aes);
    content.push_back(scores.content);
    const LogitNodes logits = build_mix_logits(g, image_features, g.input("maskfeat." + suffix));
    beta_logits.push_back(logits.beta);
    gamma_logits.push_back(logits.gamma);
  }
  const NodeId sub_aes = g.concat(aes);
  const NodeId sub_content = g.concat(content);
  const NodeId beta = g.softmax(g.concat(beta_logits));
  const NodeId gamma = g.softmax(g.concat(gamma_logits));
  const NodeId count = g.input("count");
  // sum_i w_i s_i, written as k * mean(w * s).
  const NodeId overall_aes = g.multiply(g.mean(g.multiply(beta, sub_aes)), count);
  const NodeId overall_content = g.multiply(g.mean(g.multiply(gamma, sub_content)), count);
  const NodeId l_aes = g.mean(g.square(g.subtract(g.input("y_aes"), overall_aes)));
  const NodeId l_content = g.mean(g.square(g.subtract(g.input("y_content"), overall_content)));
  out.total = g.add(g.multiply(g.input("lambda_aes"), l_aes), l_content);

  g.set_output("sub_aes", sub_aes);
  g.set_output("sub_content", sub_content);
  g.set_output("beta", beta);
  g.set_output("gamma", gamma);
  g.set_output("overall_aes", overall_aes);
  g.set_output("overall_content", overall_content);
  g.set_output("l_aes", l_aes);
  g.set_output("l_content", l_content);
  g.set_output("total", out.total);
  return out;
}

}  // namespace declutter::decomposer
