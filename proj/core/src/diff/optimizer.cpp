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

#include "declutter/diff/optimizer.hpp"

#include <cmath>

namespace declutter::diff {

double global_norm(const TensorMap& grads) {
  double total = 0.0;
  for (const auto& [name, g] : grads) {
    for (float v : g.values()) total += static_cast<double>(v) * v;
  }
  return std::sqrt(total);
}

StepReport adam_step(TensorMap& params, TensorMap& grads, OptimState& state) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw Error("gradient for unknown parameter '" + name + "'");
    if (it->second.dims() != g.dims()) {
      throw Error("gradient shape " + shape_string(g.dims()) + " != parameter shape " +
                  shape_string(it->second.dims()) + " for '" + name + "'");
    }
    for (float v : g.values()) {
      if (!std::isfinite(v)) throw NonFiniteGradient("non-finite gradient in parameter '" + name + "'");
    }
  }

  StepReport report;
  report.grad_norm = global_norm(grads);
  const AdamConfig& cfg = state.config;
  if (cfg.clip_norm > 0.0 && report.grad_norm > cfg.clip_norm) {
    report.clip_scale = cfg.clip_norm / report.grad_norm;
    const auto scale = static_cast<float>(report.clip_scale);
    for (auto& [name, g] : grads) {
      for (float& v : g.values()) v *= scale;
    }
  }

  ++state.step;
  const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<float>(cfg.beta1);
  const auto b2 = static_cast<float>(cfg.beta2);

  for (const auto& [name, g] : grads) {
    Tensor& p = params.find(name)->second;
    auto [m_it, m_new] = state.first_moment.try_emplace(name, p.dims());
    auto [v_it, v_new] = state.second_moment.try_emplace(name, p.dims());
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const float gi = g[i];
      m[i] = b1 * m[i] + (1.0f - b1) * gi;
      v[i] = b2 * v[i] + (1.0f - b2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= static_cast<float>(cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
  return report;
}

}  // namespace declutter::diff
