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

#include "declutter/inpaint/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <string_view>

#include "declutter/diff/evaluate.hpp"
#include "declutter/diff/optimizer.hpp"
#include "declutter/inpaint/inpaint.hpp"

namespace declutter::inpaint {
namespace {

bool starts_with(std::string_view name, std::string_view prefix) { return name.substr(0, prefix.size()) == prefix; }

void stamp_disk(Mask& mask, double cx, double cy, double radius) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(cy + radius)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= r2) mask.at(y, x) = 1;
    }
  }
}

void add_scaled(diff::TensorMap& into, const diff::TensorMap& grads, float scale) {
  for (const auto& [name, g] : grads) {
    auto it = into.find(name);
    if (it == into.end()) it = into.emplace(name, diff::Tensor(g.dims())).first;
    float* dst = it->second.data();
    const float* src = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += scale * src[i];
  }
}

}  // namespace

void InpainterTrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("inpainter config: " + what); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be positive");
  if (batch_size < 1) fail("batch size must be >= 1");
  if (steps < 0) fail("steps must be >= 0");
  if (side < kEncoderStride || side % kEncoderStride != 0) {
    fail("side must be a positive multiple of " + std::to_string(kEncoderStride));
  }
  if (!(lambda_b >= 0.0) || !std::isfinite(lambda_b)) fail("lambda_b must be >= 0");
  if (!std::isfinite(clip_norm)) fail("clip norm must be finite");
  if (!(object_mask_probability >= 0.0 && object_mask_probability <= 1.0)) {
    fail("object mask probability must lie in [0, 1]");
  }
}

std::vector<InpaintSample> prepare_inpaint_samples(const scenes::Dataset& dataset, int side) {
  std::vector<InpaintSample> out;
  out.reserve(dataset.samples.size());
  for (const auto& sample : dataset.samples) {
    InpaintSample s;
    s.image = scenes::preprocess(scenes::sample_image(sample), side);
    if (sample.masks) {
      for (const auto& object : *sample.masks) {
        Mask m = resize_nearest(object.mask, side, side);
        if (!m.none()) s.object_masks.push_back(std::move(m));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

Mask random_strokes(int height, int width, diff::Rng& rng) {
  Mask mask(height, width);
  const int segments = diff::uniform_int(rng, 5, 12);
  const double radius = diff::uniform_int(rng, 2, 6) / 2.0;
  const double scale = std::min(height, width);
  double x = diff::uniform(rng, 0.0, width);
  double y = diff::uniform(rng, 0.0, height);
  for (int s = 0; s < segments; ++s) {
    const double angle = diff::uniform(rng, 0.0, 2.0 * M_PI);
    const double length = diff::uniform(rng, 0.1, 0.3) * scale;
    const double nx = std::clamp(x + length * std::cos(angle), 0.0, static_cast<double>(width));
    const double ny = std::clamp(y + length * std::sin(angle), 0.0, static_cast<double>(height));
    const int n = std::max(1, static_cast<int>(std::ceil(std::hypot(nx - x, ny - y) * 2.0)));
    for (int k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      stamp_disk(mask, x + t * (nx - x), y + t * (ny - y), radius);
    }
    x = nx;
    y = ny;
  }
  return mask;
}

InpainterLossGraph build_loss_graph() {
  InpainterLossGraph lg;
  diff::Graph& g = lg.graph;
  const auto corrupted = g.input("corrupted");
  const auto target = g.input("target");
  const auto mask = g.input("mask");
  const auto one = g.input("one");
  const auto lambda_b = g.input("lambda_b");

  const GeneratorNodes gen = build_generator(g, corrupted);
  lg.y = gen.y;
  lg.b = gen.b;
  const auto keep = g.subtract(one, mask);
  const auto composite = g.add(g.multiply(target, keep), g.multiply(gen.y, mask));
  lg.d_real = build_discriminator(g, target);
  lg.d_fake = build_discriminator(g, composite);

  const auto err = g.abs(g.subtract(gen.y, target));
  lg.l_g_rec = g.mean(err);
  lg.l_g_adv = g.subtract(one, lg.d_fake);
  lg.l_g = g.add(lg.l_g_rec, lg.l_g_adv);
  lg.l_d = g.add(g.subtract(one, lg.d_real), g.add(one, lg.d_fake));
  const auto miss = g.mean(g.multiply(g.multiply(mask, g.subtract(one, gen.b)), err));
  lg.l_b = g.add(miss, g.multiply(lambda_b, g.mean(g.multiply(mask, gen.b))));

  g.set_output("y", lg.y);
  g.set_output("b", lg.b);
  g.set_output("d_real", lg.d_real);
  g.set_output("d_fake", lg.d_fake);
  g.set_output("l_g_rec", lg.l_g_rec);
  g.set_output("l_g_adv", lg.l_g_adv);
  g.set_output("l_g", lg.l_g);
  g.set_output("l_d", lg.l_d);
  g.set_output("l_b", lg.l_b);
  return lg;
}

diff::TensorMap loss_inputs(const Image& image, const Mask& mask, double lambda_b) {
  const CorruptedImage c = corrupt(image, mask);
  const diff::Tensor rgb = image_to_chw(c.p_c);
  diff::Tensor hole = mask_to_tensor(mask);
  std::vector<float> stacked(rgb.storage().begin(), rgb.storage().end());
  stacked.insert(stacked.end(), hole.storage().begin(), hole.storage().end());

  diff::TensorMap inputs;
  inputs.emplace("corrupted", diff::Tensor({kGeneratorInputChannels, image.height, image.width}, std::move(stacked)));
  inputs.emplace("target", image_to_chw(image));
  inputs.emplace("mask", std::move(hole));
  inputs.emplace("one", diff::Tensor::scalar(1.0f));
  inputs.emplace("lambda_b", diff::Tensor::scalar(static_cast<float>(lambda_b)));
  return inputs;
}

InpainterTrainResult train_inpainter(const std::vector<InpaintSample>& samples, const InpainterTrainConfig& config,
                                     std::optional<InpainterModel> initial) {
  config.validate();
  if (samples.empty()) throw InpainterTrainingError("inpainter training needs at least one sample");
  for (const auto& s : samples) {
    if (s.image.height != config.side || s.image.width != config.side) {
      throw InpainterTrainingError("inpainter sample is " + std::to_string(s.image.height) + "x" +
                                   std::to_string(s.image.width) + ", expected side " + std::to_string(config.side));
    }
  }

  diff::Rng rng(config.seed);
  InpainterTrainResult result{initial ? std::move(*initial) : InpainterModel::create(rng()), {}};
  diff::TensorMap& params = result.model.params();

  diff::AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  adam.clip_norm = config.clip_norm;
  diff::OptimState gen_state, artifact_state, disc_state;
  gen_state.config = artifact_state.config = disc_state.config = adam;

  const InpainterLossGraph lg = build_loss_graph();
  diff::BackwardOptions gen_opts, artifact_opts, disc_opts;
  gen_opts.wrt = [](std::string_view n) { return starts_with(n, "gen."); };
  artifact_opts.wrt = [](std::string_view n) { return starts_with(n, "artifact."); };
  disc_opts.wrt = [](std::string_view n) { return starts_with(n, "disc."); };

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  const float scale = 1.0f / static_cast<float>(config.batch_size);
  for (std::int64_t step = 0; step < config.steps; ++step) {
    diff::TensorMap gen_grads, artifact_grads, disc_grads;
    InpainterStepRecord record;
    record.step = step;
    for (int n = 0; n < config.batch_size; ++n) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[static_cast<std::size_t>(diff::uniform01(rng) * static_cast<double>(i))]);
        }
        cursor = 0;
      }
      const InpaintSample& sample = samples[order[cursor++]];
      Mask mask;
      if (!sample.object_masks.empty() && diff::uniform01(rng) < config.object_mask_probability) {
        mask = sample.object_masks[static_cast<std::size_t>(
            diff::uniform_int(rng, 0, static_cast<int>(sample.object_masks.size()) - 1))];
      } else {
        mask = random_strokes(config.side, config.side, rng);
      }

      const diff::TensorMap inputs = loss_inputs(sample.image, mask, config.lambda_b);
      const auto eval = diff::forward(lg.graph, inputs, params);
      const double l_g_rec = eval.value(lg.l_g_rec)[0];
      const double l_g_adv = eval.value(lg.l_g_adv)[0];
      const double l_d = eval.value(lg.l_d)[0];
      const double l_b = eval.value(lg.l_b)[0];
      if (!std::isfinite(l_g_rec) || !std::isfinite(l_g_adv) || !std::isfinite(l_d) || !std::isfinite(l_b)) {
        throw InpainterTrainingError("non-finite inpainter loss at step " + std::to_string(step) +
                                     ": l_g_rec=" + std::to_string(l_g_rec) + " l_g_adv=" + std::to_string(l_g_adv) +
                                     " l_d=" + std::to_string(l_d) + " l_b=" + std::to_string(l_b));
      }
      record.l_g_rec += l_g_rec / config.batch_size;
      record.l_g_adv += l_g_adv / config.batch_size;
      record.l_d += l_d / config.batch_size;
      record.l_b += l_b / config.batch_size;

      add_scaled(gen_grads, diff::backward(eval, lg.l_g, gen_opts), scale);
      add_scaled(artifact_grads, diff::backward(eval, lg.l_b, artifact_opts), scale);
      add_scaled(disc_grads, diff::backward(eval, lg.l_d, disc_opts), scale);
    }

    try {
      diff::adam_step(params, disc_grads, disc_state);
      diff::adam_step(params, gen_grads, gen_state);
      diff::adam_step(params, artifact_grads, artifact_state);
    } catch (const diff::NonFiniteGradient& e) {
      throw InpainterTrainingError("step " + std::to_string(step) + ": " + e.what());
    }
    result.history.push_back(record);
    if (config.on_step) config.on_step(record);
  }
  return result;
}

InpainterTrainResult train_inpainter(const scenes::Dataset& dataset, const InpainterTrainConfig& config) {
  config.validate();
  scenes::Dataset train;
  for (std::size_t i : dataset.indices(scenes::Split::kTrain)) train.samples.push_back(dataset.samples[i]);
  return train_inpainter(prepare_inpaint_samples(train, config.side), config);
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<InpainterStepRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InpainterTrainingError("cannot write " + path.string());
  out << "step,l_g_rec,l_g_adv,l_d,l_b\n";
  out.precision(9);
  for (const auto& r : history) {
    out << r.step << ',' << r.l_g_rec << ',' << r.l_g_adv << ',' << r.l_d << ',' << r.l_b << '\n';
  }
}

}  // namespace declutter::inpaint
