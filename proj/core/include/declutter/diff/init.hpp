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
#include <random>
#include <string>

#include "declutter/diff/tensor.hpp"

namespace declutter::diff {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Integer in [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape dims, int fan_in, int fan_out, Rng& rng);

/// Uniform in +-sqrt(6 / fan_in), for layers followed by ReLU.
Tensor he_uniform(Shape dims, int fan_in, Rng& rng);

enum class WeightInit { kGlorot, kHe };

/// Adds `<prefix>.w` (OIHW) and zero `<prefix>.b`.
void add_conv_params(TensorMap& params, const std::string& prefix, int out_channels, int in_channels, int kernel,
                     Rng& rng, WeightInit init = WeightInit::kGlorot);

/// Adds `<prefix>.w` ([out, in]) and zero `<prefix>.b`.
void add_fc_params(TensorMap& params, const std::string& prefix, int out_features, int in_features, Rng& rng);

}  // namespace declutter::diff
