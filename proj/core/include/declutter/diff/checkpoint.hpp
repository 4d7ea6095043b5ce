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
#include <filesystem>
#include <string>
#include <vector>

#include "declutter/diff/tensor.hpp"

namespace declutter::diff {

// Binary layout, little-endian throughout:
//   "DCLT" | u32 version (1) | u32 tensor count |
//   per tensor: u16 name length | UTF-8 name | u8 rank | u32 dims[rank] | f32 data[]
// Tensors are written in name order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const TensorMap& tensors);
TensorMap decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap load_checkpoint(const std::filesystem::path& path);

}  // namespace declutter::diff
