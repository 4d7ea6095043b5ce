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
#include <optional>
#include <string>
#include <vector>

#include "declutter/diff/grad_check.hpp"

namespace declutter::verify {

struct GradSuiteOptions {
  double eps = 1e-4;
  double tol = 1e-3;
  int probes_per_param = 6;
  std::uint64_t seed = 0;
  std::optional<diff::OpKind> fault_injection;
};

struct GradSuiteCase {
  std::string name;
  diff::GradCheckReport report;
};

/// Finite-difference checks for one small graph per differentiable op kind
/// (conv2d in its stride, padding and upsample variants), the composed
/// decomposer loss, and the generator, discriminator and artifact losses of the
/// inpainter on their own parameter groups.
std::vector<GradSuiteCase> run_grad_suite(const GradSuiteOptions& options = {});

bool all_passed(const std::vector<GradSuiteCase>& cases);

}  // namespace declutter::verify
