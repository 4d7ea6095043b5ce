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

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "declutter/diff/graph.hpp"
#include "declutter/diff/tensor.hpp"

namespace declutter::diff {

/// Values of every node after a forward pass. Leaf values alias the caller's
/// input and parameter maps, which must outlive the evaluation.
template <typename T>
class Evaluation {
 public:
  Evaluation() = default;
  Evaluation(const Evaluation&) = delete;
  Evaluation& operator=(const Evaluation&) = delete;
  Evaluation(Evaluation&&) noexcept = default;
  Evaluation& operator=(Evaluation&&) noexcept = default;

  const BasicTensor<T>& value(NodeId id) const { return *slots_.at(static_cast<std::size_t>(id)); }
  const BasicTensor<T>& output(std::string_view name) const { return value(graph_->output(name)); }
  const Graph& graph() const { return *graph_; }

  /// Copies of all named graph outputs.
  BasicTensorMap<T> outputs() const;

 private:
  template <typename U>
  friend Evaluation<U> forward(const Graph&, const BasicTensorMap<U>&, const BasicTensorMap<U>&);

  const Graph* graph_ = nullptr;
  std::vector<BasicTensor<T>> owned_;
  std::vector<const BasicTensor<T>*> slots_;
};

/// Evaluates every node in order. Throws `Error` naming the node on a missing
/// leaf or a shape mismatch. Parameters are never modified.
template <typename T>
Evaluation<T> forward(const Graph& graph, const BasicTensorMap<T>& inputs, const BasicTensorMap<T>& params);

struct BackwardOptions {
  /// Restricts which parameters receive gradients; empty means all.
  std::function<bool(std::string_view)> wrt;
  /// Test hook: scales the input gradient of every node of this kind by 1.5,
  /// producing a deliberately wrong backward rule.
  std::optional<OpKind> fault_injection;
};

/// Reverse-mode gradients of the scalar node `loss` with respect to parameters.
/// Returns one shape-matching tensor per selected parameter reachable from `loss`;
/// unreachable selected parameters get zero tensors.
template <typename T>
BasicTensorMap<T> backward(const Evaluation<T>& eval, NodeId loss, const BackwardOptions& options = {});

extern template class Evaluation<float>;
extern template class Evaluation<double>;
extern template Evaluation<float> forward(const Graph&, const BasicTensorMap<float>&, const BasicTensorMap<float>&);
extern template Evaluation<double> forward(const Graph&, const BasicTensorMap<double>&,
                                           const BasicTensorMap<double>&);
extern template BasicTensorMap<float> backward(const Evaluation<float>&, NodeId, const BackwardOptions&);
extern template BasicTensorMap<double> backward(const Evaluation<double>&, NodeId, const BackwardOptions&);

}  // namespace declutter::diff
