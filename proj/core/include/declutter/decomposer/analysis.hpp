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

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "declutter/decomposer/model.hpp"
#include "declutter/image.hpp"
#include "declutter/segmentation/segmentation.hpp"

namespace declutter::decomposer {

struct ScorePair {
  double aes = 0.0;
  double content = 0.0;
};

struct WeightVectors {
  std::vector<double> beta;
  std::vector<double> gamma;
};

enum class ObjectClass { kNormal, kClutter };

/// Clutter iff q < 0; q == 0 counts as normal.
ObjectClass classify_clutter(double q);

struct ObjectContribution {
  int object_id = 0;
  std::string label;
  double q = 0.0;
  ScorePair sub;
  double beta = 0.0;
  double gamma = 0.0;
  bool is_clutter = false;
};

struct ContributionReport {
  std::vector<ObjectContribution> objects;
  ScorePair overall;
};

/// Model-side inputs for one photo: the image and masks resampled to the model
/// side, plus the per-object blurred sub-images and mask grids.
struct PreparedInput {
  Image image;
  std::vector<Mask> masks;
  std::vector<Image> subimages;
  std::vector<diff::Tensor> mask_features;
};

/// Area-averages a mask onto a grid x grid map, flattened to [grid * grid].
diff::Tensor mask_grid_features(const Mask& mask, int grid);

PreparedInput prepare_input(const Architecture& arch, const Image& image, std::span<const ObjectMask> masks);

/// Graph inputs for a decomposition graph over `input`.
diff::TensorMap decomposition_inputs(const PreparedInput& input, double y_aes, double y_content, double lambda_aes);

/// Scores one sub-image already at the model side. Throws on a size mismatch.
ScorePair score_subimage(const DecomposerModel& model, const segmentation::SubImage& subimage);

/// Image-conditioned softmax weights over the k >= 1 objects.
WeightVectors mix_weights(const DecomposerModel& model, const Image& image, std::span<const ObjectMask> masks);

/// s_aes = sum beta_i s_aes_i, s_content = sum gamma_i s_content_i.
ScorePair predict_overall(std::span<const ScorePair> sub_scores, const WeightVectors& weights);

/// beta (overall.aes - sub.aes) + gamma (overall.content - sub.content).
double object_contribution(const ScorePair& overall, const ScorePair& sub, double beta, double gamma);

/// Per-object contribution q_i = beta_i (s_aes - s_aes_i) + gamma_i (s_content - s_content_i)
/// against the decomposed overall prediction, and the resulting classification.
ContributionReport contribution(const DecomposerModel& model, const Image& image, std::span<const ObjectMask> masks);

/// {"overall": {...}, "objects": [{id, label, q, beta, gamma, s_aes_sub, s_content_sub,
/// is_clutter[, mask_rle]}]}; masks are included when supplied.
nlohmann::json report_to_json(const ContributionReport& report, std::span<const ObjectMask> masks = {});

struct ReportWithMasks {
  ContributionReport report;
  std::vector<ObjectMask> masks;  // empty when the JSON carried none
};
ReportWithMasks report_from_json(const nlohmann::json& json);

}  // namespace declutter::decomposer
