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
#include <stdexcept>
#include <vector>

#include "declutter/decomposer/analysis.hpp"
#include "declutter/decomposer/model.hpp"
#include "declutter/scenes/dataset.hpp"

namespace declutter::decomposer {

struct TrainConfig {
  double lambda_aes = 1.0;
  double learning_rate = 4e-4;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 15;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  int side = 64;
  /// Share of train-tagged samples held out for early stopping when the dataset
  /// has no val-tagged samples.
  double val_fraction = 0.1;
  /// Stops after this many optimizer steps when > 0.
  std::int64_t max_steps = 0;
  /// Called after every epoch with (epoch, train total, val total).
  std::function<void(int, double, double)> on_epoch;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct StepRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double l_aes = 0.0;
  double l_content = 0.0;
  double total = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double train_total = 0.0;
  double val_total = 0.0;
};

struct TrainResult {
  DecomposerModel model;  // best-validation parameters
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One training example at the model side.
struct TrainingSample {
  Image image;
  std::vector<ObjectMask> masks;
  double y_aes = 0.0;
  double y_content = 0.0;
};

/// Loads, resizes and (for samples without masks) heuristically segments every
/// sample. Samples where detection finds no object are dropped.
std::vector<TrainingSample> prepare_samples(const scenes::Dataset& dataset, const std::vector<std::size_t>& indices,
                                            int side);

struct SampleLoss {
  double l_aes = 0.0;
  double l_content = 0.0;
  double total = 0.0;
};

/// Forward + backward on one sample. Gradients are scaled by `scale` and added into
/// `grads` (created on first use).
SampleLoss accumulate_gradients(const DecomposerModel& model, const TrainingSample& sample, double lambda_aes,
                                float scale, diff::TensorMap& grads);

/// Loss of one sample without gradients.
SampleLoss evaluate_sample(const DecomposerModel& model, const TrainingSample& sample, double lambda_aes);

/// Minimises lambda_aes * L_aes + L_content with clipped Adam and early stopping on
/// the validation total.
TrainResult train_decomposer(const scenes::Dataset& dataset, const TrainConfig& config);

/// CSV with columns step,epoch,l_aes,l_content,total.
void write_loss_csv(const std::filesystem::path& path, const std::vector<StepRecord>& steps);

}  // namespace declutter::decomposer
