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

namespace declutter::decomposer {

/// Network shapes. Only `side` varies; everything else is fixed by the design.
///
///   feat   4 stride-2 3x3 convs {16,32,64,64} + ReLU, shared by every sub-image and
///          the original image. Its output ([64, side/16, side/16]) is the feature
///          boundary where a pretrained extractor would plug in.
///   score  two 3x3 convs {32,16} + ReLU, flatten, and two heads
///          fc(32) -> ReLU -> fc(1) -> sigmoid (aesthetic, content).
///   mix    per object: concat(flattened image features, mask grid) -> fc(128) -> ReLU
///          -> two fc(1) logit heads; softmax across the objects.
struct Architecture {
  int side = 64;
  std::array<int, 4> feature_channels{16, 32, 64, 64};
  std::array<int, 2> score_channels{32, 16};
  int head_hidden = 32;
  int mix_hidden = 128;

  int feature_grid() const { return side / 16; }
  int mask_grid() const { return side / 8; }
  int feature_size() const { return feature_channels[3] * feature_grid() * feature_grid(); }
  int score_flat_size() const { return score_channels[1] * feature_grid() * feature_grid(); }
  int mix_input_size() const { return feature_size() + mask_grid() * mask_grid(); }
};

/// Parameters of the score-decomposition network, named `feat.*`, `score.*`, `mix.*`.
class DecomposerModel {
 public:
  /// Glorot-initialised model for square inputs of `side` (a multiple of 16, >= 16).
  static DecomposerModel create(int side, std::uint64_t seed);
  /// Adopts a parameter set, inferring `side` and validating every shape.
  static DecomposerModel from_params(diff::TensorMap params);
  static DecomposerModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const Architecture& arch() const { return arch_; }
  const diff::TensorMap& params() const { return params_; }
  diff::TensorMap& params() { return params_; }

 private:
  DecomposerModel(Architecture arch, diff::TensorMap params) : arch_(arch), params_(std::move(params)) {}

  Architecture arch_;
  diff::TensorMap params_;
};

/// Expected parameter shapes for an architecture.
diff::BasicTensorMap<float> parameter_template(const Architecture& arch);

// Graph fragments. All of them reference parameters by their fixed names, so
// repeated use within one graph shares weights.
diff::NodeId build_features(diff::Graph& graph, diff::NodeId image);
struct ScoreNodes {
  diff::NodeId aes;      // [1]
  diff::NodeId content;  // [1]
};
ScoreNodes build_scores(diff::Graph& graph, diff::NodeId features);
struct LogitNodes {
  diff::NodeId beta;   // [1]
  diff::NodeId gamma;  // [1]
};
LogitNodes build_mix_logits(diff::Graph& graph, diff::NodeId flat_image_features, diff::NodeId mask_features);

/// The full decomposition for k objects, with its training losses.
///
/// Inputs: "image" and "sub.<i>" ([3,S,S]), "maskfeat.<i>" ([G*G]), "count" ([1], = k),
/// "y_aes", "y_content", "lambda_aes" ([1]).
/// Outputs: "sub_aes", "sub_content", "beta", "gamma" ([k]); "overall_aes",
/// "overall_content", "l_aes", "l_content", "total" ([1]).
struct DecompositionGraph {
  diff::Graph graph;
  int k = 0;
  diff::NodeId total = -1;
};
DecompositionGraph build_decomposition_graph(int k);

}  // namespace declutter::decomposer
