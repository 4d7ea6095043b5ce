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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "declutter/diff/graph.hpp"
#include "declutter/diff/tensor.hpp"

namespace declutter::diff {

struct GradCheckOptions {
  double eps = 1e-4;
  double tol = 1e-3;
  /// Elements probed per parameter tensor; smaller tensors are probed exhaustively.
  /// Elements whose +-eps evaluations straddle a relu or abs kink are skipped
  /// and replaced by another element.
  int probes_per_param = 6;
  std::uint64_t seed = 0;
  std::function<bool(std::string_view)> wrt;
  std::optional<OpKind> fault_injection;
};

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  int probes = 0;
  int kink_skips = 0;  // probes whose +-eps points straddle a relu/abs kink
  bool flagged = false;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  bool passed = true;
};

/// |a - n| / max(|a|, |n|, 1e-6).
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of the scalar `loss` node against central
/// finite differences. Inputs and parameters are promoted to double so the
/// comparison measures the backward rules rather than float round-off.
GradCheckReport grad_check(const Graph& graph, NodeId loss, const TensorMap& inputs, const TensorMap& params,
                           const GradCheckOptions& options = {});

}  // namespace declutter::diff
