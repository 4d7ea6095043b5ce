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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "declutter/decomposer/analysis.hpp"
#include "declutter/decomposer/model.hpp"
#include "declutter/decomposer/train.hpp"
#include "declutter/diff/evaluate.hpp"
#include "fixtures.hpp"
#include "support.hpp"

namespace declutter::decomposer {
namespace {

using testing::box_mask;

std::vector<ObjectMask> random_boxes(int side, int k, diff::Rng& rng) {
  std::vector<ObjectMask> masks;
  for (int i = 0; i < k; ++i) {
    const int w = diff::uniform_int(rng, 2, side / 3);
    const int h = diff::uniform_int(rng, 2, side / 3);
    masks.push_back({i, "obj" + std::to_string(i),
                     box_mask(side, side, diff::uniform_int(rng, 0, side - w), diff::uniform_int(rng, 0, side - h), w, h)});
  }
  return masks;
}

TEST(Classify, SignRule) {
  EXPECT_EQ(classify_clutter(-0.1), ObjectClass::kClutter);
  EXPECT_EQ(classify_clutter(0.0), ObjectClass::kNormal);
  EXPECT_EQ(classify_clutter(0.3), ObjectClass::kNormal);
}

TEST(Contribution, HandArithmetic) {
  const double q = object_contribution({0.6, 0.4}, {0.8, 0.4}, 0.5, 0.5);
  EXPECT_NEAR(q, -0.1, 1e-12);
  EXPECT_EQ(classify_clutter(q), ObjectClass::kClutter);
}

TEST(PredictOverall, HandArithmetic) {
  const std::vector<ScorePair> subs = {{0.2, 0.1}, {0.6, 0.3}};
  const auto o = predict_overall(subs, {{0.5, 0.5}, {0.25, 0.75}});
  EXPECT_NEAR(o.aes, 0.4, 1e-12);
  EXPECT_NEAR(o.content, 0.25, 1e-12);
  const std::vector<ScorePair> one = {{0.37, 0.81}};
  const auto single = predict_overall(one, {{1.0}, {1.0}});
  EXPECT_DOUBLE_EQ(single.aes, 0.37);
  EXPECT_DOUBLE_EQ(single.content, 0.81);
}

TEST(PredictOverall, MatchesLoopOracle) {
  diff::Rng rng(17);
  std::vector<ScorePair> subs(5);
  WeightVectors w;
  for (auto& s : subs) s = {diff::uniform01(rng), diff::uniform01(rng)};
  for (int i = 0; i < 5; ++i) {
    w.beta.push_back(diff::uniform01(rng));
    w.gamma.push_back(diff::uniform01(rng));
  }
  double a = 0.0;
  double c = 0.0;
  for (int i = 0; i < 5; ++i) {
    a += w.beta[i] * subs[i].aes;
    c += w.gamma[i] * subs[i].content;
  }
  const auto o = predict_overall(subs, w);
  EXPECT_NEAR(o.aes, a, 1e-12);
  EXPECT_NEAR(o.content, c, 1e-12);
  w.beta.pop_back();
  EXPECT_THROW(predict_overall(subs, w), std::invalid_argument);
}

class ModelTest : public ::testing::Test {
 protected:
  DecomposerModel model = DecomposerModel::create(64, testing::kDecomposerSeed);
};

TEST_F(ModelTest, ZeroHeadsScoreOneHalf) {
  DecomposerModel zeroed = model;
  for (const char* head : {"score.aes.fc2", "score.content.fc2"}) {
    zeroed.params().at(std::string(head) + ".w").fill(0.0f);
    zeroed.params().at(std::string(head) + ".b").fill(0.0f);
  }
  diff::Rng rng(1);
  const auto s = score_subimage(zeroed, {testing::random_image(64, 64, rng), 0});
  EXPECT_DOUBLE_EQ(s.aes, 0.5);
  EXPECT_DOUBLE_EQ(s.content, 0.5);
}

TEST_F(ModelTest, ScoresDeterministicAndBounded) {
  diff::Rng rng(2);
  const Image img = testing::random_image(64, 64, rng);
  const auto a = score_subimage(model, {img, 0});
  const auto b = score_subimage(model, {img, 1});
  EXPECT_EQ(a.aes, b.aes);
  EXPECT_EQ(a.content, b.content);
  EXPECT_GT(a.aes, 0.0);
  EXPECT_LT(a.aes, 1.0);
  EXPECT_THROW(score_subimage(model, {Image(32, 32), 0}), std::invalid_argument);
}

TEST_F(ModelTest, GoldenScoresWeightsAndContributions) {
  const auto golden = testing::read_json(testing::golden_path("decomposer.json"));
  const auto scene = testing::three_object_scene();
  ASSERT_EQ(scene.seed, golden["scene_seed"].get<std::uint64_t>());
  const auto pair = score_subimage(model, segmentation::blur_subimage(scene.image, scene.masks[1]));
  EXPECT_NEAR(pair.aes, golden["score_subimage"][0].get<double>(), 1e-6);
  EXPECT_NEAR(pair.content, golden["score_subimage"][1].get<double>(), 1e-6);
  const auto w = mix_weights(model, scene.image, scene.masks);
  const auto report = contribution(model, scene.image, scene.masks);
  double beta_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(w.beta[i], golden["beta"][i].get<double>(), 1e-6);
    EXPECT_NEAR(w.gamma[i], golden["gamma"][i].get<double>(), 1e-6);
    EXPECT_NEAR(report.objects[i].q, golden["q"][i].get<double>(), 1e-6);
    beta_sum += w.beta[i];
  }
  EXPECT_NEAR(beta_sum, 1.0, 1e-6);
}

TEST_F(ModelTest, SingletonWeightsAreOne) {
  diff::Rng rng(3);
  const auto masks = random_boxes(64, 1, rng);
  const auto w = mix_weights(model, testing::random_image(64, 64, rng), masks);
  ASSERT_EQ(w.beta.size(), 1u);
  EXPECT_DOUBLE_EQ(w.beta[0], 1.0);
  EXPECT_DOUBLE_EQ(w.gamma[0], 1.0);
}

TEST_F(ModelTest, WeightsFormDistributions) {
  diff::Rng rng(4);
  for (int k = 1; k <= 6; ++k) {
    const auto masks = random_boxes(64, k, rng);
    const auto w = mix_weights(model, testing::random_image(64, 64, rng), masks);
    ASSERT_EQ(w.beta.size(), static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      EXPECT_GE(w.beta[i], 0.0);
      EXPECT_GE(w.gamma[i], 0.0);
    }
    EXPECT_NEAR(std::accumulate(w.beta.begin(), w.beta.end(), 0.0), 1.0, 1e-6);
    EXPECT_NEAR(std::accumulate(w.gamma.begin(), w.gamma.end(), 0.0), 1.0, 1e-6);
  }
  EXPECT_THROW(mix_weights(model, Image(64, 64), {}), std::invalid_argument);
  EXPECT_THROW(contribution(model, Image(64, 64), {}), std::invalid_argument);
}

TEST_F(ModelTest, SingleObjectContributesNothing) {
  diff::Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = DecomposerModel::create(64, 1000 + trial);
    const auto masks = random_boxes(64, 1, rng);
    const auto r = contribution(m, testing::random_image(64, 64, rng), masks);
    EXPECT_NEAR(r.objects[0].q, 0.0, 1e-6);
    EXPECT_FALSE(r.objects[0].is_clutter);
  }
}

TEST_F(ModelTest, ReportIsInternallyConsistent) {
  diff::Rng rng(6);
  const auto masks = random_boxes(64, 4, rng);
  const Image img = testing::random_image(64, 64, rng);
  const auto r = contribution(model, img, masks);
  std::vector<ScorePair> subs;
  WeightVectors w;
  for (const auto& o : r.objects) {
    subs.push_back(o.sub);
    w.beta.push_back(o.beta);
    w.gamma.push_back(o.gamma);
  }
  const auto overall = predict_overall(subs, w);
  EXPECT_NEAR(overall.aes, r.overall.aes, 1e-6);
  EXPECT_NEAR(overall.content, r.overall.content, 1e-6);
  for (std::size_t i = 0; i < r.objects.size(); ++i) {
    const auto& o = r.objects[i];
    EXPECT_NEAR(o.q, object_contribution(r.overall, o.sub, o.beta, o.gamma), 1e-12);
    EXPECT_EQ(o.is_clutter, o.q < 0.0);
    const auto direct = score_subimage(model, segmentation::blur_subimage(img, masks[i]));
    EXPECT_NEAR(o.sub.aes, direct.aes, 1e-6);
  }
  // The same overall score feeds the training loss.
  const auto prepared = prepare_input(model.arch(), img, masks);
  const auto dg = build_decomposition_graph(4);
  const auto eval = diff::forward(dg.graph, decomposition_inputs(prepared, 0.3, 0.7, 1.0), model.params());
  EXPECT_NEAR(eval.output("overall_aes")[0], r.overall.aes, 1e-6);
  EXPECT_NEAR(eval.output("l_aes")[0], (0.3 - r.overall.aes) * (0.3 - r.overall.aes), 1e-6);
  EXPECT_NEAR(eval.output("l_content")[0], (0.7 - r.overall.content) * (0.7 - r.overall.content), 1e-6);
}

TEST_F(ModelTest, PermutationEquivariance) {
  diff::Rng rng(7);
  const auto masks = random_boxes(64, 4, rng);
  const Image img = testing::random_image(64, 64, rng);
  const auto base = contribution(model, img, masks);
  std::vector<std::size_t> perm = {2, 0, 3, 1};
  std::vector<ObjectMask> permuted;
  for (std::size_t p : perm) permuted.push_back(masks[p]);
  const auto r = contribution(model, img, permuted);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto& a = r.objects[i];
    const auto& b = base.objects[perm[i]];
    EXPECT_NEAR(a.beta, b.beta, 1e-6);
    EXPECT_NEAR(a.gamma, b.gamma, 1e-6);
    EXPECT_NEAR(a.q, b.q, 1e-6);
    EXPECT_NEAR(a.sub.aes, b.sub.aes, 1e-6);
    EXPECT_EQ(a.object_id, b.object_id);
  }
}

TEST_F(ModelTest, CheckpointRoundTrip) {
  const auto dir = testing::scratch_dir("decomposer_ckpt");
  model.save(dir / "m.dclt");
  const auto loaded = DecomposerModel::load(dir / "m.dclt");
  EXPECT_EQ(loaded.params(), model.params());
  EXPECT_EQ(loaded.arch().side, 64);
  const auto scene = testing::three_object_scene();
  const auto a = contribution(model, scene.image, scene.masks);
  const auto b = contribution(loaded, scene.image, scene.masks);
  for (std::size_t i = 0; i < a.objects.size(); ++i) EXPECT_EQ(a.objects[i].q, b.objects[i].q);
}

TEST_F(ModelTest, FromParamsValidatesShapes) {
  EXPECT_EQ(DecomposerModel::from_params(DecomposerModel::create(32, 1).params()).arch().side, 32);
  auto bad = model.params();
  bad.at("score.aes.fc1.w") = diff::Tensor({3, 3});
  EXPECT_ANY_THROW(DecomposerModel::from_params(bad));
  auto missing = model.params();
  missing.erase("mix.beta.b");
  EXPECT_ANY_THROW(DecomposerModel::from_params(missing));
  EXPECT_ANY_THROW(DecomposerModel::create(40, 1));
}

TEST_F(ModelTest, ReportJsonRoundTrip) {
  const auto scene = testing::three_object_scene();
  const auto r = contribution(model, scene.image, scene.masks);
  const auto back = report_from_json(report_to_json(r, scene.masks));
  ASSERT_EQ(back.report.objects.size(), 3u);
  ASSERT_EQ(back.masks.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(back.report.objects[i].q, r.objects[i].q);
    EXPECT_EQ(back.report.objects[i].is_clutter, r.objects[i].is_clutter);
    EXPECT_EQ(back.masks[i].mask, scene.masks[i].mask);
  }
  EXPECT_THROW(report_from_json({{"objects", 1}}), std::invalid_argument);
}

TEST(MaskGrid, AreaAverages) {
  const auto f = mask_grid_features(box_mask(8, 8, 0, 0, 2, 4), 4);
  EXPECT_FLOAT_EQ(f[0], 1.0f);
  EXPECT_FLOAT_EQ(f[4], 1.0f);
  EXPECT_FLOAT_EQ(f[1], 0.0f);
  EXPECT_FLOAT_EQ(f[8], 0.0f);
  const auto g = mask_grid_features(box_mask(8, 8, 1, 0, 1, 1), 4);
  EXPECT_FLOAT_EQ(g[0], 0.25f);
}

TEST(Training, ZeroLambdaZeroesAestheticGradients) {
  const auto model = DecomposerModel::create(32, 9);
  const auto scene = scenes::generate_scene(12, {32, 4});
  TrainingSample sample{scene.image, scene.masks, scene.y_aes, scene.y_content};
  diff::TensorMap grads;
  accumulate_gradients(model, sample, 0.0, 1.0f, grads);
  for (const char* name : {"score.aes.fc1.w", "score.aes.fc1.b", "score.aes.fc2.w", "mix.beta.w", "mix.beta.b"}) {
    for (float g : grads.at(name).values()) ASSERT_EQ(g, 0.0f) << name;
  }
  double content_norm = 0.0;
  for (float g : grads.at("score.content.fc2.w").values()) content_norm += std::abs(g);
  EXPECT_GT(content_norm, 0.0);
}

scenes::Dataset small_dataset(int n, int side) {
  std::vector<scenes::SceneSample> scenes;
  for (int i = 0; i < n; ++i) scenes.push_back(scenes::generate_scene(500 + i, {side, 5}));
  return scenes::dataset_from_scenes(scenes);
}

TEST(Training, DeterministicHistory) {
  const auto ds = small_dataset(8, 32);
  TrainConfig cfg;
  cfg.side = 32;
  cfg.max_epochs = 2;
  cfg.patience = 1;
  cfg.batch_size = 4;
  cfg.seed = 3;
  const auto a = train_decomposer(ds, cfg);
  const auto b = train_decomposer(ds, cfg);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  ASSERT_FALSE(a.steps.empty());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_EQ(a.steps[i].total, b.steps[i].total);
    EXPECT_EQ(a.steps[i].l_aes, b.steps[i].l_aes);
  }
  EXPECT_EQ(a.model.params(), b.model.params());
}

TEST(Training, OverfitsSingleSample) {
  const auto ds = small_dataset(1, 32);
  TrainConfig cfg;
  cfg.side = 32;
  cfg.batch_size = 1;
  cfg.max_epochs = 500;
  cfg.patience = 499;
  cfg.max_steps = 500;
  const auto result = train_decomposer(ds, cfg);
  double best = 1.0;
  for (const auto& s : result.steps) best = std::min(best, s.total);
  EXPECT_LT(best, 1e-3);
  EXPECT_LE(result.steps.size(), 500u);
}

TEST(Training, ConfigValidation) {
  auto bad = [](auto mutate) {
    TrainConfig cfg;
    mutate(cfg);
    return cfg;
  };
  EXPECT_NO_THROW(TrainConfig{}.validate());
  EXPECT_THROW(bad([](TrainConfig& c) { c.patience = 100; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](TrainConfig& c) { c.learning_rate = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](TrainConfig& c) { c.batch_size = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](TrainConfig& c) { c.lambda_aes = -1; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](TrainConfig& c) { c.side = 24; }).validate(), std::invalid_argument);
  EXPECT_THROW(train_decomposer(scenes::Dataset{}, TrainConfig{}), TrainingError);
}

TEST(Training, LossCsvHeader) {
  const auto dir = testing::scratch_dir("decomposer_csv");
  write_loss_csv(dir / "loss.csv", {{0, 0, 0.1, 0.2, 0.3}});
  std::ifstream in(dir / "loss.csv");
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "step,epoch,l_aes,l_content,total");
  EXPECT_EQ(row, "0,0,0.1,0.2,0.3");
}

}  // namespace
}  // namespace declutter::decomposer
