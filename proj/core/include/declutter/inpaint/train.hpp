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
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "declutter/diff/graph.hpp"
#include "declutter/diff/init.hpp"
#include "declutter/image.hpp"
#include "declutter/inpaint/model.hpp"
#include "declutter/scenes/dataset.hpp"

namespace declutter::inpaint {

struct InpainterStepRecord {
  std::int64_t step = 0;
  double l_g_rec = 0.0;
  double l_g_adv = 0.0;
  double l_d = 0.0;
  double l_b = 0.0;
};

struct InpainterTrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 64;
  std::int64_t steps = 2000;
  int side = 32;
  double lambda_b = 0.05;
  /// Global gradient-norm ceiling per parameter group; <= 0 disables.
  double clip_norm = 0.0;
  /// Chance that a sample with object masks is corrupted by one of them rather
  /// than by random strokes.
  double object_mask_probability = 0.5;
  std::uint64_t seed = 0;
  std::function<void(const InpainterStepRecord&)> on_step;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct InpainterTrainResult {
  InpainterModel model;
  std::vector<InpainterStepRecord> history;
};

class InpainterTrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InpaintSample {
  Image image;
  std::vector<Mask> object_masks;
};

/// Loads every sample and resizes image and masks to `side` x `side`.
std::vector<InpaintSample> prepare_inpaint_samples(const scenes::Dataset& dataset, int side);

/// 5-12 connected straight segments of width 2-6 px.
Mask random_strokes(int height, int width, diff::Rng& rng);

/// All three objectives on one graph. Inputs: "corrupted" [4,H,W] (p_c and m_c),
/// "target" [3,H,W], "mask" [1,H,W], "one" [1], "lambda_b" [1].
struct InpainterLossGraph {
  diff::Graph graph;
  diff::NodeId y = 0;
  diff::NodeId b = 0;
  diff::NodeId d_real = 0;
  diff::NodeId d_fake = 0;
  diff::NodeId l_g_rec = 0;
  diff::NodeId l_g_adv = 0;
  diff::NodeId l_g = 0;  // optimised over gen.*
  diff::NodeId l_d = 0;  // optimised over disc.*
  diff::NodeId l_b = 0;  // optimised over artifact.*
};
InpainterLossGraph build_loss_graph();

/// Input map for build_loss_graph().
diff::TensorMap loss_inputs(const Image& image, const Mask& mask, double lambda_b);

/// Each step draws a batch, computes all three losses at the current weights and
/// updates the generator, artifact head and discriminator with separate Adam
/// states. Throws InpainterTrainingError on a non-finite loss or gradient.
InpainterTrainResult train_inpainter(const std::vector<InpaintSample>& samples, const InpainterTrainConfig& config,
                                     std::optional<InpainterModel> initial = std::nullopt);
InpainterTrainResult train_inpainter(const scenes::Dataset& dataset, const InpainterTrainConfig& config);

/// CSV with columns step,l_g_rec,l_g_adv,l_d,l_b.
void write_loss_csv(const std::filesystem::path& path, const std::vector<InpainterStepRecord>& history);

}  // namespace declutter::inpaint
