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

#include "declutter/decomposer/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "declutter/diff/evaluate.hpp"
#include "declutter/diff/init.hpp"
#include "declutter/diff/optimizer.hpp"

namespace declutter::decomposer {
namespace {

const DecompositionGraph& graph_for(int k) {
  // Graphs depend only on k; built once per k and never mutated afterwards.
  thread_local std::map<int, DecompositionGraph> cache;
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, build_decomposition_graph(k)).first;
  return it->second;
}

diff::TensorMap sample_inputs(const Architecture& arch, const TrainingSample& sample, double lambda_aes) {
  // Sub-images are blurred afresh on every pass.
  return decomposition_inputs(prepare_input(arch, sample.image, sample.masks), sample.y_aes, sample.y_content,
                              lambda_aes);
}

SampleLoss read_loss(const diff::Evaluation<float>& eval) {
  return {eval.output("l_aes")[0], eval.output("l_content")[0], eval.output("total")[0]};
}

void shuffle(std::vector<std::size_t>& order, diff::Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(diff::uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("train config: ") + what);
  };
  require(lambda_aes >= 0.0, "lambda_aes must be >= 0");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(batch_size > 0, "batch size must be positive");
  require(max_epochs > 0, "max epochs must be positive");
  require(patience > 0 && patience < max_epochs, "patience must be positive and below max epochs");
  require(clip_norm > 0.0, "clip norm must be positive");
  require(side >= 16 && side % 16 == 0, "side must be a positive multiple of 16");
  require(val_fraction >= 0.0 && val_fraction < 1.0, "val fraction must be in [0, 1)");
}

std::vector<TrainingSample> prepare_samples(const scenes::Dataset& dataset, const std::vector<std::size_t>& indices,
                                            int side) {
  std::vector<TrainingSample> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    const scenes::DatasetSample& s = dataset.samples.at(idx);
    const Image original = scenes::sample_image(s);
    TrainingSample sample;
    sample.image = scenes::preprocess(original, side);
    sample.y_aes = s.y_aes;
    sample.y_content = s.y_content;
    std::vector<ObjectMask> masks =
        s.masks ? *s.masks : segmentation::detect_objects(original, segmentation::DetectionMode::kHeuristic);
    for (ObjectMask& m : masks) {
      if (m.mask.height != original.height || m.mask.width != original.width) {
        throw TrainingError("sample " + std::to_string(idx) + ": mask size differs from the image");
      }
      m.mask = resize_nearest(m.mask, side, side);
    }
    if (masks.empty()) continue;
    sample.masks = std::move(masks);
    out.push_back(std::move(sample));
  }
  return out;
}

SampleLoss accumulate_gradients(const DecomposerModel& model, const TrainingSample& sample, double lambda_aes,
                                float scale, diff::TensorMap& grads) {
  const DecompositionGraph& dg = graph_for(static_cast<int>(sample.masks.size()));
  const auto inputs = sample_inputs(model.arch(), sample, lambda_aes);
  const auto eval = diff::forward(dg.graph, inputs, model.params());
  auto sample_grads = diff::backward(eval, dg.total);
  for (auto& [name, g] : sample_grads) {
    auto [it, fresh] = grads.try_emplace(name, g.dims());
    float* dst = it->second.data();
    const float* src = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += scale * src[i];
  }
  return read_loss(eval);
}

SampleLoss evaluate_sample(const DecomposerModel& model, const TrainingSample& sample, double lambda_aes) {
  const DecompositionGraph& dg = graph_for(static_cast<int>(sample.masks.size()));
  const auto inputs = sample_inputs(model.arch(), sample, lambda_aes);
  return read_loss(diff::forward(dg.graph, inputs, model.params()));
}

TrainResult train_decomposer(const scenes::Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.samples.empty()) throw TrainingError("cannot train on an empty dataset");

  std::vector<std::size_t> train_idx = dataset.indices(scenes::Split::kTrain);
  std::vector<std::size_t> val_idx = dataset.indices(scenes::Split::kVal);
  diff::Rng rng(config.seed);
  if (val_idx.empty()) {
    if (train_idx.size() >= 2) {
      auto carved = train_idx;
      shuffle(carved, rng);
      const std::size_t n_val = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(carved.size()))));
      val_idx.assign(carved.begin(), carved.begin() + static_cast<std::ptrdiff_t>(n_val));
      train_idx.assign(carved.begin() + static_cast<std::ptrdiff_t>(n_val), carved.end());
      std::sort(train_idx.begin(), train_idx.end());
    } else {
      val_idx = train_idx;  // too small to hold out; validate on the training sample
    }
  }
  const auto train = prepare_samples(dataset, train_idx, config.side);
  const auto val = prepare_samples(dataset, val_idx, config.side);
  if (train.empty()) throw TrainingError("no training sample has a detectable object");

  DecomposerModel model = DecomposerModel::create(config.side, config.seed);
  diff::OptimState optim;
  optim.config.learning_rate = config.learning_rate;
  optim.config.clip_norm = config.clip_norm;

  TrainResult result{model, {}, {}, 0};
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;
  std::int64_t step = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto validation_total = [&]() {
    double total = 0.0;
    for (const auto& s : val) total += evaluate_sample(model, s, config.lambda_aes).total;
    return val.empty() ? 0.0 : total / static_cast<double>(val.size());
  };

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_total = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto scale = 1.0f / static_cast<float>(end - start);
      diff::TensorMap grads;
      StepRecord record{step, epoch, 0.0, 0.0, 0.0};
      for (std::size_t b = start; b < end; ++b) {
        const SampleLoss loss = accumulate_gradients(model, train[order[b]], config.lambda_aes, scale, grads);
        if (!std::isfinite(loss.total)) {
          std::ostringstream msg;
          msg << "non-finite loss at step " << step << " (epoch " << epoch << ", sample " << order[b]
              << "): l_aes=" << loss.l_aes << " l_content=" << loss.l_content;
          throw TrainingError(msg.str());
        }
        record.l_aes += loss.l_aes * scale;
        record.l_content += loss.l_content * scale;
        record.total += loss.total * scale;
      }
      try {
        diff::adam_step(model.params(), grads, optim);
      } catch (const diff::NonFiniteGradient& e) {
        throw TrainingError("step " + std::to_string(step) + ": " + e.what());
      }
      epoch_total += record.total * static_cast<double>(end - start);
      seen += end - start;
      result.steps.push_back(record);
      ++step;
      if (config.max_steps > 0 && step >= config.max_steps) break;
    }

    const double val_total = validation_total();
    result.epochs.push_back({epoch, epoch_total / static_cast<double>(std::max<std::size_t>(seen, 1)), val_total});
    if (config.on_epoch) config.on_epoch(epoch, result.epochs.back().train_total, val_total);
    if (val_total < best_val) {
      best_val = val_total;
      result.model = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
    if (config.max_steps > 0 && step >= config.max_steps) break;
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<StepRecord>& steps) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw TrainingError("cannot write " + path.string());
  out << "step,epoch,l_aes,l_content,total\n";
  out.precision(9);
  for (const auto& s : steps) out << s.step << ',' << s.epoch << ',' << s.l_aes << ',' << s.l_content << ',' << s.total << '\n';
}

}  // namespace declutter::decomposer
