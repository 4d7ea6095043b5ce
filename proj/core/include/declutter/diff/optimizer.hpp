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

#include "declutter/diff/tensor.hpp"

namespace declutter::diff {

struct AdamConfig {
  double learning_rate = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm ceiling; values <= 0 disable clipping.
  double clip_norm = 5.0;
};

/// Adam moments keyed by parameter name. Moments are created lazily on the first
/// step that sees a parameter and always match its shape.
struct OptimState {
  AdamConfig config;
  std::int64_t step = 0;
  TensorMap first_moment;
  TensorMap second_moment;
};

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

struct StepReport {
  double grad_norm = 0.0;  // before clipping
  double clip_scale = 1.0;
};

/// Global-norm L2 of all gradients, accumulated in double.
double global_norm(const TensorMap& grads);

/// Clips `grads` in place to the state's clip norm, then applies one bias-corrected
/// Adam update to every parameter that has a gradient. Throws `NonFiniteGradient`
/// (leaving params and state untouched) when any gradient is NaN or infinite.
StepReport adam_step(TensorMap& params, TensorMap& grads, OptimState& state);

}  // namespace declutter::diff
