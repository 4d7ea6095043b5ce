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
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace declutter::diff {

using NodeId = int;

enum class OpKind : std::uint8_t {
  // Leaves.
  kInput,
  kParam,
  // Operations.
  kConv2d,
  kFullyConnected,
  kRelu,
  kSigmoid,
  kSoftmax,
  kFlatten,
  kAdd,
  kMultiply,
  kSubtract,
  kMean,
  kAbs,
  kSquare,
  kConcat,
};

std::string_view op_name(OpKind kind);

enum class Padding : std::uint8_t { kSame, kValid };

/// Convolution layout is CHW input, OIHW weight, O bias. `upsample` > 1 applies a
/// nearest-neighbour enlargement of the input before the convolution (resize-conv).
struct Conv2dAttrs {
  int stride = 1;
  Padding padding = Padding::kSame;
  int upsample = 1;
};

struct Node {
  OpKind kind;
  std::vector<NodeId> inputs;
  std::string name;  // leaves only
  Conv2dAttrs conv;
};

/// Static computation graph. Nodes are appended in topological order, so every
/// node's inputs precede it and the graph is acyclic by construction.
///
/// Binary elementwise ops broadcast when both operands have the same rank and each
/// axis matches or is 1 on one side, or when one operand has a single element.
class Graph {
 public:
  NodeId input(std::string_view name);
  /// Repeated calls with the same name return the same node, so parameters are shared.
  NodeId param(std::string_view name);

  NodeId conv2d(NodeId x, NodeId weight, NodeId bias, Conv2dAttrs attrs = {});
  NodeId fully_connected(NodeId x, NodeId weight, NodeId bias);
  NodeId relu(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId softmax(NodeId x);  // over the last axis
  NodeId flatten(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId multiply(NodeId a, NodeId b);
  NodeId subtract(NodeId a, NodeId b);
  NodeId mean(NodeId x);  // over all elements, shape {1}
  NodeId abs(NodeId x);
  NodeId square(NodeId x);
  NodeId concat(const std::vector<NodeId>& parts);  // along axis 0

  void set_output(std::string_view name, NodeId node);
  NodeId output(std::string_view name) const;
  const std::map<std::string, NodeId, std::less<>>& outputs() const { return outputs_; }

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }

  std::vector<std::string> param_names() const;
  std::vector<std::string> input_names() const;

 private:
  NodeId push(OpKind kind, std::vector<NodeId> inputs, std::string name = {}, Conv2dAttrs attrs = {});
  void check_ref(NodeId id) const;

  std::vector<Node> nodes_;
  std::map<std::string, NodeId, std::less<>> params_;
  std::map<std::string, NodeId, std::less<>> inputs_;
  std::map<std::string, NodeId, std::less<>> outputs_;
};

}  // namespace declutter::diff
