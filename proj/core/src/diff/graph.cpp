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

#include "declutter/diff/graph.hpp"

#include <sstream>

#include "declutter/diff/tensor.hpp"

namespace declutter::diff {

std::string shape_string(const Shape& dims) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out << 'x';
    out << dims[i];
  }
  out << ']';
  return out.str();
}

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kFullyConnected: return "fully-connected";
    case OpKind::kRelu: return "relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kFlatten: return "flatten";
    case OpKind::kAdd: return "add";
    case OpKind::kMultiply: return "multiply";
    case OpKind::kSubtract: return "subtract";
    case OpKind::kMean: return "mean";
    case OpKind::kAbs: return "abs";
    case OpKind::kSquare: return "square";
    case OpKind::kConcat: return "concat";
  }
  return "unknown";
}

NodeId Graph::push(OpKind kind, std::vector<NodeId> inputs, std::string name, Conv2dAttrs attrs) {
  for (NodeId id : inputs) check_ref(id);
  nodes_.push_back(Node{kind, std::move(inputs), std::move(name), attrs});
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Graph::check_ref(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw Error("graph reference to unknown node " + std::to_string(id));
  }
}

NodeId Graph::input(std::string_view name) {
  if (auto it = inputs_.find(name); it != inputs_.end()) return it->second;
  NodeId id = push(OpKind::kInput, {}, std::string(name));
  inputs_.emplace(std::string(name), id);
  return id;
}

NodeId Graph::param(std::string_view name) {
  if (auto it = params_.find(name); it != params_.end()) return it->second;
  NodeId id = push(OpKind::kParam, {}, std::string(name));
  params_.emplace(std::string(name), id);
  return id;
}

NodeId Graph::conv2d(NodeId x, NodeId weight, NodeId bias, Conv2dAttrs attrs) {
  if (attrs.stride != 1 && attrs.stride != 2) throw Error("conv2d stride must be 1 or 2");
  if (attrs.upsample < 1) throw Error("conv2d upsample factor must be >= 1");
  return push(OpKind::kConv2d, {x, weight, bias}, {}, attrs);
}

NodeId Graph::fully_connected(NodeId x, NodeId weight, NodeId bias) {
  return push(OpKind::kFullyConnected, {x, weight, bias});
}
NodeId Graph::relu(NodeId x) { return push(OpKind::kRelu, {x}); }
NodeId Graph::sigmoid(NodeId x) { return push(OpKind::kSigmoid, {x}); }
NodeId Graph::softmax(NodeId x) { return push(OpKind::kSoftmax, {x}); }
NodeId Graph::flatten(NodeId x) { return push(OpKind::kFlatten, {x}); }
NodeId Graph::add(NodeId a, NodeId b) { return push(OpKind::kAdd, {a, b}); }
NodeId Graph::multiply(NodeId a, NodeId b) { return push(OpKind::kMultiply, {a, b}); }
NodeId Graph::subtract(NodeId a, NodeId b) { return push(OpKind::kSubtract, {a, b}); }
NodeId Graph::mean(NodeId x) { return push(OpKind::kMean, {x}); }
NodeId Graph::abs(NodeId x) { return push(OpKind::kAbs, {x}); }
NodeId Graph::square(NodeId x) { return push(OpKind::kSquare, {x}); }

NodeId Graph::concat(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw Error("concat needs at least one input");
  return push(OpKind::kConcat, parts);
}

void Graph::set_output(std::string_view name, NodeId node) {
  check_ref(node);
  outputs_.insert_or_assign(std::string(name), node);
}

NodeId Graph::output(std::string_view name) const {
  auto it = outputs_.find(name);
  if (it == outputs_.end()) throw Error("graph has no output named '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> Graph::param_names() const {
  std::vector<std::string> names;
  for (const auto& [name, id] : params_) names.push_back(name);
  return names;
}

std::vector<std::string> Graph::input_names() const {
  std::vector<std::string> names;
  for (const auto& [name, id] : inputs_) names.push_back(name);
  return names;
}

}  // namespace declutter::diff
