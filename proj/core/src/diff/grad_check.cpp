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

#include "declutter/diff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "declutter/diff/evaluate.hpp"
#include "declutter/diff/init.hpp"

namespace declutter::diff {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport grad_check(const Graph& graph, NodeId loss, const TensorMap& inputs, const TensorMap& params,
                           const GradCheckOptions& options) {
  const auto inputs64 = cast_map<double>(inputs);
  auto params64 = cast_map<double>(params);

  BackwardOptions bw;
  bw.wrt = options.wrt;
  bw.fault_injection = options.fault_injection;
  BasicTensorMap<double> analytic;
  {
    auto eval = forward(graph, inputs64, params64);
    analytic = backward(eval, loss, bw);
  }

  std::vector<NodeId> kinked;  // inputs of relu and abs nodes
  for (const Node& node : graph.nodes()) {
    if (node.kind == OpKind::kRelu || node.kind == OpKind::kAbs) kinked.push_back(node.inputs[0]);
  }
  auto crosses_kink = [&](const Evaluation<double>& a, const Evaluation<double>& b) {
    for (NodeId id : kinked) {
      const auto va = a.value(id).values();
      const auto vb = b.value(id).values();
      for (std::size_t i = 0; i < va.size(); ++i) {
        if ((va[i] > 0.0) != (vb[i] > 0.0)) return true;
      }
    }
    return false;
  };

  Rng rng(options.seed);
  GradCheckReport report;
  for (const auto& [name, grad] : analytic) {
    auto& p = params64.find(name)->second;
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto limit = static_cast<int>(std::max(options.probes_per_param, 1));

    ParamCheck check{name};
    for (std::size_t i = 0; i < order.size() && check.probes < limit; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(order.size() - i));
      std::swap(order[i], order[j]);
      const std::size_t idx = order[i];
      const double saved = p[idx];
      p[idx] = saved + options.eps;
      const auto up = forward(graph, inputs64, params64);
      p[idx] = saved - options.eps;
      const auto down = forward(graph, inputs64, params64);
      p[idx] = saved;
      // Central differences are meaningless across a non-differentiable point.
      if (crosses_kink(up, down)) {
        ++check.kink_skips;
        continue;
      }
      const double numeric = (up.value(loss)[0] - down.value(loss)[0]) / (2.0 * options.eps);
      check.max_rel_error = std::max(check.max_rel_error, relative_error(grad[idx], numeric));
      ++check.probes;
    }
    check.flagged = check.probes == 0 || check.max_rel_error >= options.tol;
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.passed = report.passed && !check.flagged;
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace declutter::diff
