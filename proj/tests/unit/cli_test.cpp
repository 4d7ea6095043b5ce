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
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "declutter/decomposer/model.hpp"
#include "declutter/inpaint/inpaint.hpp"
#include "declutter/inpaint/model.hpp"
#include "fixtures.hpp"
#include "support.hpp"

namespace declutter {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int status = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string command = std::string(DECLUTTER_CLI) + " " + args + " 2>&1";
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return result;
  std::array<char, 4096> buffer{};
  std::size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) result.output.append(buffer.data(), n);
  const int raw = pclose(pipe);
  result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string q(const fs::path& path) { return "'" + path.string() + "'"; }

TEST(CliTest, NoSubcommandIsUsageError) {
  const auto r = run("");
  EXPECT_EQ(r.status, 2);
}

TEST(CliTest, UnknownSubcommandIsUsageError) {
  const auto r = run("frobnicate --x 1");
  EXPECT_EQ(r.status, 2);
}

TEST(CliTest, MissingRequiredFlagPrintsUsage) {
  const auto r = run("gen-scenes --count 3");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("--seed"), std::string::npos);
  EXPECT_NE(r.output.find("--out"), std::string::npos);
}

TEST(CliTest, FailedLoadExitsOne) {
  const auto dir = testing::scratch_dir("cli_failed_load");
  write_png(dir / "img.png", Image(8, 8));
  const auto r = run("analyze --image " + q(dir / "img.png") + " --decomposer " + q(dir / "missing.dclt"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("error"), std::string::npos);
  EXPECT_EQ(run("analyze --image " + q(dir / "none.png") + " --decomposer " + q(dir / "missing.dclt")).status, 1);
}

TEST(CliTest, InvalidChoiceIsUsageError) {
  const auto dir = testing::scratch_dir("cli_bad_choice");
  write_png(dir / "img.png", Image(8, 8));
  const auto r = run("analyze --image " + q(dir / "img.png") + " --decomposer x --masks psychic");
  EXPECT_EQ(r.status, 2);
}

TEST(CliTest, GenScenesIsDeterministic) {
  const auto a = testing::scratch_dir("cli_gen_a");
  const auto b = testing::scratch_dir("cli_gen_b");
  ASSERT_EQ(run("gen-scenes --count 10 --seed 7 --out " + q(a)).status, 0);
  ASSERT_EQ(run("gen-scenes --count 10 --seed 7 --out " + q(b)).status, 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
  }
  EXPECT_EQ(files, 11u);  // ten images plus index.json
  const json index = testing::read_json(a / "index.json");
  EXPECT_EQ(index["scenes"].size(), 10u);
}

TEST(CliTest, AnalyzeSingleObjectGivesZeroContribution) {
  const auto dir = testing::scratch_dir("cli_analyze");
  decomposer::DecomposerModel::create(64, testing::kDecomposerSeed).save(dir / "dec.dclt");
  const auto scene = testing::three_object_scene();
  write_png(dir / "img.png", scene.image);
  const json masks = json::array({{{"label", "cup"}, {"mask", mask_to_rle(scene.masks[1].mask)}}});
  std::ofstream(dir / "masks.json") << masks.dump();
  const auto r = run("analyze --image " + q(dir / "img.png") + " --decomposer " + q(dir / "dec.dclt") +
                     " --masks oracle --mask-file " + q(dir / "masks.json") + " --out " + q(dir / "report.json"));
  ASSERT_EQ(r.status, 0) << r.output;
  const json report = testing::read_json(dir / "report.json");
  ASSERT_EQ(report["objects"].size(), 1u);
  EXPECT_NEAR(report["objects"][0]["q"].get<double>(), 0.0, 1e-6);
  EXPECT_EQ(report["objects"][0]["label"], "cup");
}

TEST(CliTest, AnalyzeOracleWithoutMaskFileIsUsageError) {
  const auto dir = testing::scratch_dir("cli_analyze_nomask");
  decomposer::DecomposerModel::create(64, testing::kDecomposerSeed).save(dir / "dec.dclt");
  write_png(dir / "img.png", Image(8, 8));
  const auto r = run("analyze --image " + q(dir / "img.png") + " --decomposer " + q(dir / "dec.dclt") +
                     " --masks oracle");
  EXPECT_EQ(r.status, 2);
}

TEST(CliTest, CleanMatchesLibrary) {
  const auto dir = testing::scratch_dir("cli_clean");
  decomposer::DecomposerModel::create(64, testing::kDecomposerSeed).save(dir / "dec.dclt");
  const auto inpainter = inpaint::InpainterModel::create(testing::kInpainterSeed);
  inpainter.save(dir / "inp.dclt");
  const auto scene = testing::three_object_scene();
  write_png(dir / "img.png", scene.image);
  json masks = json::array();
  for (const auto& m : scene.masks) masks.push_back({{"label", m.label}, {"mask", mask_to_rle(m.mask)}});
  std::ofstream(dir / "masks.json") << masks.dump();
  ASSERT_EQ(run("analyze --image " + q(dir / "img.png") + " --decomposer " + q(dir / "dec.dclt") +
                " --masks oracle --mask-file " + q(dir / "masks.json") + " --out " + q(dir / "report.json"))
                .status,
            0);
  json report = testing::read_json(dir / "report.json");
  for (auto& o : report["objects"]) o["is_clutter"] = false;
  report["objects"][2]["is_clutter"] = true;
  std::ofstream(dir / "report.json") << report.dump();

  const auto r = run("clean --image " + q(dir / "img.png") + " --report " + q(dir / "report.json") + " --inpainter " +
                     q(dir / "inp.dclt") + " --fidelity high --out " + q(dir / "out.png") + " --dump-dir " +
                     q(dir / "trace"));
  ASSERT_EQ(r.status, 0) << r.output;
  const Image decoded = read_png(dir / "img.png");
  const auto direct = inpaint::iterative_inpaint(inpainter, decoded, scene.masks[2].mask,
                                                 inpaint::max_iterations(inpaint::Fidelity::kHigh));
  const auto expected = encode_png(direct.image);
  EXPECT_EQ(slurp(dir / "out.png"), std::string(expected.begin(), expected.end()));
  EXPECT_TRUE(fs::exists(dir / "trace" / "iter_01_y.png"));
  EXPECT_TRUE(fs::exists(dir / "trace" / "result.png"));

  EXPECT_EQ(run("clean --image " + q(dir / "img.png") + " --report " + q(dir / "report.json") + " --inpainter " +
                q(dir / "inp.dclt") + " --fidelity ultra --out " + q(dir / "x.png"))
                .status,
            1);
}

TEST(CliTest, TrainDecomposerIsReproducible) {
  const auto dir = testing::scratch_dir("cli_train_dec");
  ASSERT_EQ(run("gen-scenes --count 8 --seed 3 --side 32 --out " + q(dir / "corpus")).status, 0);
  const std::string common = "train-decomposer --data " + q(dir / "corpus") +
                             " --side 32 --batch 4 --epochs 2 --patience 1 --max-steps 2 --seed 5 --out ";
  const auto r = run(common + q(dir / "a.dclt"));
  ASSERT_EQ(r.status, 0) << r.output;
  ASSERT_EQ(run(common + q(dir / "b.dclt")).status, 0);
  EXPECT_EQ(slurp(dir / "a.dclt"), slurp(dir / "b.dclt"));
  EXPECT_EQ(slurp(dir / "a.dclt.loss.csv"), slurp(dir / "b.dclt.loss.csv"));
  EXPECT_EQ(slurp(dir / "a.dclt.loss.csv").substr(0, 5), "step,");
  EXPECT_NO_THROW(decomposer::DecomposerModel::load(dir / "a.dclt"));
}

TEST(CliTest, TrainInpainterIsReproducible) {
  const auto dir = testing::scratch_dir("cli_train_inp");
  ASSERT_EQ(run("gen-scenes --textures --count 4 --seed 3 --side 32 --out " + q(dir / "corpus")).status, 0);
  const std::string common =
      "train-inpainter --data " + q(dir / "corpus") + " --side 32 --batch 2 --steps 2 --seed 5 --out ";
  const auto r = run(common + q(dir / "a.dclt") + " --loss-csv " + q(dir / "a.csv"));
  ASSERT_EQ(r.status, 0) << r.output;
  ASSERT_EQ(run(common + q(dir / "b.dclt") + " --loss-csv " + q(dir / "b.csv")).status, 0);
  EXPECT_EQ(slurp(dir / "a.dclt"), slurp(dir / "b.dclt"));
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_NO_THROW(inpaint::InpainterModel::load(dir / "a.dclt"));
}

TEST(CliTest, GradCheckPasses) {
  const auto r = run("grad-check --probes 2");
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("all gradients agree"), std::string::npos);
}

TEST(CliTest, GradCheckFailsOnImpossibleTolerance) {
  const auto r = run("grad-check --probes 1 --tol 0");
  EXPECT_EQ(r.status, 1) << r.output;
}

}  // namespace
}  // namespace declutter
