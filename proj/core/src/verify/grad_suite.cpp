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

#include "declutter/verify/grad_suite.hpp"

#include <algorithm>
#include <functional>
#include <string_view>

#include "declutter/decomposer/analysis.hpp"
#include "declutter/decomposer/model.hpp"
#include "declutter/diff/evaluate.hpp"
#include "declutter/diff/init.hpp"
#include "declutter/inpaint/model.hpp"
#include "declutter/inpaint/train.hpp"

namespace declutter::verify {
namespace {

using diff::Graph;
using diff::NodeId;
using diff::Rng;
using diff::Shape;
using diff::Tensor;
using diff::TensorMap;

Tensor random_tensor(const Shape& dims, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(dims);
  for (float& v : t.values()) v = static_cast<float>(diff::uniform(rng, lo, hi));
  return t;
}

/// Values kept away from zero so abs and relu kinks sit outside the probe step.
Tensor off_zero_tensor(const Shape& dims, Rng& rng) {
  Tensor t(dims);
  for (float& v : t.values()) {
    const double mag = diff::uniform(rng, 0.1, 1.0);
    v = static_cast<float>(diff::uniform01(rng) < 0.5 ? -mag : mag);
  }
  return t;
}

struct OpCase {
  std::string name;
  std::function<NodeId(Graph&, TensorMap&, Rng&)> build;  // returns the op node
};

/// Loss = mean(op * r) for a fixed random r, so every output element matters.
diff::GradCheckReport check_op(const OpCase& c, const GradSuiteOptions& options, Rng& rng) {
  Graph g;
  TensorMap params;
  const NodeId out = c.build(g, params, rng);
  TensorMap inputs;
  // The output shape is only known after a forward pass.
  const auto probe = diff::forward(g, inputs, params);
  inputs.emplace("r", random_tensor(probe.value(out).dims(), rng));
  const NodeId loss = g.mean(g.multiply(out, g.input("r")));
  diff::GradCheckOptions opts;
  opts.eps = options.eps;
  opts.tol = options.tol;
  opts.probes_per_param = options.probes_per_param;
  opts.seed = options.seed;
  opts.fault_injection = options.fault_injection;
  return diff::grad_check(g, loss, inputs, params, opts);
}

std::vector<OpCase> op_cases() {
  auto conv = [](diff::Conv2dAttrs attrs) {
    return [attrs](Graph& g, TensorMap& p, Rng& rng) {
      p.emplace("x", random_tensor({2, 6, 6}, rng));
      p.emplace("w", random_tensor({3, 2, 3, 3}, rng));
      p.emplace("b", random_tensor({3}, rng));
      return g.conv2d(g.param("x"), g.param("w"), g.param("b"), attrs);
    };
  };
  auto unary = [](NodeId (Graph::*op)(NodeId), bool off_zero) {
    return [op, off_zero](Graph& g, TensorMap& p, Rng& rng) {
      p.emplace("x", off_zero ? off_zero_tensor({2, 3, 4}, rng) : random_tensor({2, 3, 4}, rng));
      return (g.*op)(g.param("x"));
    };
  };
  auto binary = [](NodeId (Graph::*op)(NodeId, NodeId), Shape b_dims) {
    return [op, b_dims](Graph& g, TensorMap& p, Rng& rng) {
      p.emplace("a", random_tensor({2, 3, 4}, rng));
      p.emplace("b", random_tensor(b_dims, rng));
      return (g.*op)(g.param("a"), g.param("b"));
    };
  };
  return {
      {"conv2d", conv({1, diff::Padding::kSame, 1})},
      {"conv2d-stride2-valid", conv({2, diff::Padding::kValid, 1})},
      {"conv2d-stride2-same", conv({2, diff::Padding::kSame, 1})},
      {"conv2d-upsample2", conv({1, diff::Padding::kSame, 2})},
      {"fully-connected",
       [](Graph& g, TensorMap& p, Rng& rng) {
         p.emplace("x", random_tensor({5}, rng));
         p.emplace("w", random_tensor({4, 5}, rng));
         p.emplace("b", random_tensor({4}, rng));
         return g.fully_connected(g.param("x"), g.param("w"), g.param("b"));
       }},
      {"relu", unary(&Graph::relu, true)},
      {"sigmoid", unary(&Graph::sigmoid, false)},
      {"softmax", unary(&Graph::softmax, false)},
      {"flatten", unary(&Graph::flatten, false)},
      {"mean", unary(&Graph::mean, false)},
      {"abs", unary(&Graph::abs, true)},
      {"square", unary(&Graph::square, false)},
      {"add", binary(&Graph::add, {2, 3, 4})},
      {"add-broadcast", binary(&Graph::add, {2, 1, 4})},
      {"multiply", binary(&Graph::multiply, {2, 3, 4})},
      {"multiply-scalar", binary(&Graph::multiply, {1})},
      {"subtract", binary(&Graph::subtract, {1, 3, 1})},
      {"concat",
       [](Graph& g, TensorMap& p, Rng& rng) {
         p.emplace("a", random_tensor({2, 3}, rng));
         p.emplace("b", random_tensor({1, 3}, rng));
         return g.concat({g.param("a"), g.param("b")});
       }},
  };
}

diff::GradCheckOptions model_options(const GradSuiteOptions& options, std::string_view prefix) {
  diff::GradCheckOptions opts;
  opts.eps = options.eps;
  opts.tol = options.tol;
  opts.probes_per_param = options.probes_per_param;
  opts.seed = options.seed;
  opts.fault_injection = options.fault_injection;
  if (!prefix.empty()) {
    opts.wrt = [p = std::string(prefix)](std::string_view n) { return n.substr(0, p.size()) == p; };
  }
  return opts;
}

Image random_image(int side, Rng& rng) {
  Image img(side, side);
  for (float& v : img.data) v = static_cast<float>(diff::uniform01(rng));
  return img;
}

Mask random_box(int side, Rng& rng) {
  Mask m(side, side);
  const int x0 = diff::uniform_int(rng, 0, side - 4);
  const int y0 = diff::uniform_int(rng, 0, side - 4);
  const int w = diff::uniform_int(rng, 2, 4);
  const int h = diff::uniform_int(rng, 2, 4);
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) m.at(y, x) = 1;
  }
  return m;
}

/// Zero-initialised biases put every pre-activation of an all-zero receptive
/// field exactly on the relu kink; shift them off zero for the check.
TensorMap with_random_biases(TensorMap params, Rng& rng) {
  for (auto& [name, t] : params) {
    if (name.size() < 2 || name.compare(name.size() - 2, 2, ".b") != 0) continue;
    t = off_zero_tensor(t.dims(), rng);
    for (float& v : t.values()) v *= 0.2f;
  }
  return params;
}

}  // namespace

std::vector<GradSuiteCase> run_grad_suite(const GradSuiteOptions& options) {
  std::vector<GradSuiteCase> cases;
  Rng rng(options.seed);
  for (const OpCase& c : op_cases()) cases.push_back({c.name, check_op(c, options, rng)});

  {
    constexpr int kSide = 16;
    const auto model = decomposer::DecomposerModel::create(kSide, rng());
    const Image image = random_image(kSide, rng);
    std::vector<ObjectMask> masks;
    for (int i = 0; i < 3; ++i) masks.push_back({i, "object", random_box(kSide, rng)});
    const auto input = decomposer::prepare_input(model.arch(), image, masks);
    const auto dg = decomposer::build_decomposition_graph(3);
    const TensorMap params = with_random_biases(model.params(), rng);
    const auto inputs = decomposer::decomposition_inputs(input, 0.7, 0.4, 1.0);
    cases.push_back({"decomposer-total",
                     diff::grad_check(dg.graph, dg.total, inputs, params, model_options(options, ""))});
  }

  {
    constexpr int kSide = 8;
    const auto model = inpaint::InpainterModel::create(rng());
    const Image image = random_image(kSide, rng);
    const Mask mask = random_box(kSide, rng);
    const auto lg = inpaint::build_loss_graph();
    const auto inputs = inpaint::loss_inputs(image, mask, 0.05);
    const TensorMap params = with_random_biases(model.params(), rng);
    cases.push_back({"inpainter-generator",
                     diff::grad_check(lg.graph, lg.l_g, inputs, params, model_options(options, "gen."))});
    cases.push_back({"inpainter-discriminator",
                     diff::grad_check(lg.graph, lg.l_d, inputs, params, model_options(options, "disc."))});
    cases.push_back({"inpainter-artifact", diff::grad_check(lg.graph, lg.l_b, inputs, params,
                                                            model_options(options, "artifact."))});
  }
  return cases;
}

bool all_passed(const std::vector<GradSuiteCase>& cases) {
  return std::all_of(cases.begin(), cases.end(), [](const GradSuiteCase& c) { return c.report.passed; });
}

}  // namespace declutter::verify
