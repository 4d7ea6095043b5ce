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

#include "declutter/decomposer/analysis.hpp"

#include <stdexcept>

#include "declutter/diff/evaluate.hpp"
#include "declutter/scenes/dataset.hpp"

namespace declutter::decomposer {
namespace {

using diff::Tensor;

void check_nonempty(std::span<const ObjectMask> masks) {
  if (masks.empty()) throw std::invalid_argument("decomposition needs at least one object mask");
}

}  // namespace

ObjectClass classify_clutter(double q) { return q < 0.0 ? ObjectClass::kClutter : ObjectClass::kNormal; }

Tensor mask_grid_features(const Mask& mask, int grid) {
  Tensor out(diff::Shape{grid * grid});
  std::vector<double> sums(static_cast<std::size_t>(grid * grid), 0.0);
  std::vector<double> counts(sums.size(), 0.0);
  for (int y = 0; y < mask.height; ++y) {
    const int gy = y * grid / mask.height;
    for (int x = 0; x < mask.width; ++x) {
      const auto cell = static_cast<std::size_t>(gy * grid + x * grid / mask.width);
      sums[cell] += mask.at(y, x);
      counts[cell] += 1.0;
    }
  }
  for (std::size_t i = 0; i < sums.size(); ++i) out[i] = counts[i] > 0 ? static_cast<float>(sums[i] / counts[i]) : 0.0f;
  return out;
}

PreparedInput prepare_input(const Architecture& arch, const Image& image, std::span<const ObjectMask> masks) {
  PreparedInput in;
  in.image = scenes::preprocess(image, arch.side);
  const Image blurred = segmentation::gaussian_blur(in.image);
  for (const ObjectMask& object : masks) {
    if (object.mask.height != image.height || object.mask.width != image.width) {
      throw std::invalid_argument("object mask " + std::to_string(object.id) + " does not match the image size");
    }
    Mask scaled = resize_nearest(object.mask, arch.side, arch.side);
    in.subimages.push_back(segmentation::blur_subimage(in.image, blurred, ObjectMask{object.id, {}, scaled}).image);
    in.mask_features.push_back(mask_grid_features(scaled, arch.mask_grid()));
    in.masks.push_back(std::move(scaled));
  }
  return in;
}

diff::TensorMap decomposition_inputs(const PreparedInput& input, double y_aes, double y_content, double lambda_aes) {
  diff::TensorMap inputs;
  inputs.emplace("image", image_to_chw(input.image));
  for (std::size_t i = 0; i < input.subimages.size(); ++i) {
    inputs.emplace("sub." + std::to_string(i), image_to_chw(input.subimages[i]));
    inputs.emplace("maskfeat." + std::to_string(i), input.mask_features[i]);
  }
  inputs.emplace("count", Tensor::scalar(static_cast<float>(input.subimages.size())));
  inputs.emplace("y_aes", Tensor::scalar(static_cast<float>(y_aes)));
  inputs.emplace("y_content", Tensor::scalar(static_cast<float>(y_content)));
  inputs.emplace("lambda_aes", Tensor::scalar(static_cast<float>(lambda_aes)));
  return inputs;
}

ScorePair score_subimage(const DecomposerModel& model, const segmentation::SubImage& subimage) {
  const int side = model.arch().side;
  if (subimage.image.height != side || subimage.image.width != side) {
    throw std::invalid_argument("sub-image is " + std::to_string(subimage.image.height) + "x" +
                                std::to_string(subimage.image.width) + ", model expects " + std::to_string(side) +
                                "x" + std::to_string(side));
  }
  diff::Graph graph;
  const ScoreNodes nodes = build_scores(graph, build_features(graph, graph.input("sub")));
  diff::TensorMap inputs;
  inputs.emplace("sub", image_to_chw(subimage.image));
  const auto eval = diff::forward(graph, inputs, model.params());
  return {eval.value(nodes.aes)[0], eval.value(nodes.content)[0]};
}

WeightVectors mix_weights(const DecomposerModel& model, const Image& image, std::span<const ObjectMask> masks) {
  check_nonempty(masks);
  const Architecture& arch = model.arch();
  diff::Graph graph;
  const diff::NodeId features = graph.flatten(build_features(graph, graph.input("image")));
  std::vector<diff::NodeId> beta_logits;
  std::vector<diff::NodeId> gamma_logits;
  diff::TensorMap inputs;
  inputs.emplace("image", image_to_chw(scenes::preprocess(image, arch.side)));
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const std::string name = "maskfeat." + std::to_string(i);
    const LogitNodes logits = build_mix_logits(graph, features, graph.input(name));
    beta_logits.push_back(logits.beta);
    gamma_logits.push_back(logits.gamma);
    inputs.emplace(name, mask_grid_features(resize_nearest(masks[i].mask, arch.side, arch.side), arch.mask_grid()));
  }
  const diff::NodeId beta = graph.softmax(graph.concat(beta_logits));
  const diff::NodeId gamma = graph.softmax(graph.concat(gamma_logits));
  const auto eval = diff::forward(graph, inputs, model.params());
  WeightVectors w;
  for (float v : eval.value(beta).values()) w.beta.push_back(v);
  for (float v : eval.value(gamma).values()) w.gamma.push_back(v);
  return w;
}

ScorePair predict_overall(std::span<const ScorePair> sub_scores, const WeightVectors& weights) {
  if (sub_scores.size() != weights.beta.size() || sub_scores.size() != weights.gamma.size()) {
    throw std::invalid_argument("predict_overall: " + std::to_string(sub_scores.size()) + " scores vs " +
                                std::to_string(weights.beta.size()) + " weights");
  }
  ScorePair overall;
  for (std::size_t i = 0; i < sub_scores.size(); ++i) {
    overall.aes += weights.beta[i] * sub_scores[i].aes;
    overall.content += weights.gamma[i] * sub_scores[i].content;
  }
  return overall;
}

double object_contribution(const ScorePair& overall, const ScorePair& sub, double beta, double gamma) {
  return beta * (overall.aes - sub.aes) + gamma * (overall.content - sub.content);
}

ContributionReport contribution(const DecomposerModel& model, const Image& image, std::span<const ObjectMask> masks) {
  check_nonempty(masks);
  const PreparedInput input = prepare_input(model.arch(), image, masks);
  const DecompositionGraph dg = build_decomposition_graph(static_cast<int>(masks.size()));
  const auto inputs = decomposition_inputs(input, 0.0, 0.0, 1.0);
  const auto eval = diff::forward(dg.graph, inputs, model.params());
  const auto& sub_aes = eval.output("sub_aes");
  const auto& sub_content = eval.output("sub_content");
  const auto& beta = eval.output("beta");
  const auto& gamma = eval.output("gamma");

  ContributionReport report;
  report.overall = {eval.output("overall_aes")[0], eval.output("overall_content")[0]};
  for (std::size_t i = 0; i < masks.size(); ++i) {
    ObjectContribution obj;
    obj.object_id = masks[i].id;
    obj.label = masks[i].label;
    obj.sub = {sub_aes[i], sub_content[i]};
    obj.beta = beta[i];
    obj.gamma = gamma[i];
    obj.q = object_contribution(report.overall, obj.sub, obj.beta, obj.gamma);
    obj.is_clutter = classify_clutter(obj.q) == ObjectClass::kClutter;
    report.objects.push_back(std::move(obj));
  }
  return report;
}

nlohmann::json report_to_json(const ContributionReport& report, std::span<const ObjectMask> masks) {
  nlohmann::json objects = nlohmann::json::array();
  for (std::size_t i = 0; i < report.objects.size(); ++i) {
    const ObjectContribution& o = report.objects[i];
    nlohmann::json entry = {{"id", o.object_id},
                            {"label", o.label},
                            {"q", o.q},
                            {"beta", o.beta},
                            {"gamma", o.gamma},
                            {"s_aes_sub", o.sub.aes},
                            {"s_content_sub", o.sub.content},
                            {"is_clutter", o.is_clutter}};
    if (i < masks.size()) entry["mask_rle"] = mask_to_rle(masks[i].mask);
    objects.push_back(std::move(entry));
  }
  return {{"overall", {{"s_aes", report.overall.aes}, {"s_content", report.overall.content}}},
          {"objects", std::move(objects)}};
}

ReportWithMasks report_from_json(const nlohmann::json& json) {
  ReportWithMasks out;
  try {
    const auto& overall = json.at("overall");
    out.report.overall = {overall.at("s_aes").get<double>(), overall.at("s_content").get<double>()};
    for (const auto& entry : json.at("objects")) {
      ObjectContribution o;
      o.object_id = entry.at("id").get<int>();
      o.label = entry.at("label").get<std::string>();
      o.q = entry.at("q").get<double>();
      o.beta = entry.at("beta").get<double>();
      o.gamma = entry.at("gamma").get<double>();
      o.sub = {entry.at("s_aes_sub").get<double>(), entry.at("s_content_sub").get<double>()};
      o.is_clutter = entry.at("is_clutter").get<bool>();
      if (entry.contains("mask_rle")) out.masks.push_back(ObjectMask{o.object_id, o.label, mask_from_rle(entry.at("mask_rle"))});
      out.report.objects.push_back(std::move(o));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed contribution report: ") + e.what());
  }
  return out;
}

}  // namespace declutter::decomposer
