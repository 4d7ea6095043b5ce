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

#include "declutter/diff/init.hpp"

#include <cmath>

namespace declutter::diff {

Tensor glorot_uniform(Shape dims, int fan_in, int fan_out, Rng& rng) {
  Tensor t(std::move(dims));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (float& v : t.values()) v = static_cast<float>(uniform(rng, -limit, limit));
  return t;
}

Tensor he_uniform(Shape dims, int fan_in, Rng& rng) {
  Tensor t(std::move(dims));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (float& v : t.values()) v = static_cast<float>(uniform(rng, -limit, limit));
  return t;
}

void add_conv_params(TensorMap& params, const std::string& prefix, int out_channels, int in_channels, int kernel,
                     Rng& rng, WeightInit init) {
  const int area = kernel * kernel;
  Shape dims{out_channels, in_channels, kernel, kernel};
  params.insert_or_assign(prefix + ".w", init == WeightInit::kHe
                                             ? he_uniform(std::move(dims), in_channels * area, rng)
                                             : glorot_uniform(std::move(dims), in_channels * area, out_channels * area, rng));
  params.insert_or_assign(prefix + ".b", Tensor(Shape{out_channels}));
}

void add_fc_params(TensorMap& params, const std::string& prefix, int out_features, int in_features, Rng& rng) {
  params.insert_or_assign(prefix + ".w", glorot_uniform({out_features, in_features}, in_features, out_features, rng));
  params.insert_or_assign(prefix + ".b", Tensor(Shape{out_features}));
}

}  // namespace declutter::diff
