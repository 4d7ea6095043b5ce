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

#include <cmath>

#include "declutter/scenes/scene.hpp"
#include "declutter/segmentation/segmentation.hpp"
#include "support.hpp"

namespace declutter::segmentation {
namespace {

using testing::box_mask;

TEST(Kernel, MatchesDirectGaussian) {
  const auto k = gaussian_kernel();
  double raw[13][13];
  double total = 0.0;
  for (int y = 0; y < 13; ++y) {
    for (int x = 0; x < 13; ++x) {
      raw[y][x] = std::exp(-((y - 6) * (y - 6) + (x - 6) * (x - 6)) / 2.0);
      total += raw[y][x];
    }
  }
  double sum = 0.0;
  for (int y = 0; y < 13; ++y) {
    for (int x = 0; x < 13; ++x) {
      EXPECT_NEAR(k[y * 13 + x], raw[y][x] / total, 1e-12);
      EXPECT_GE(k[y * 13 + x], 0.0);
      EXPECT_DOUBLE_EQ(k[y * 13 + x], k[x * 13 + y]);
      EXPECT_DOUBLE_EQ(k[y * 13 + x], k[(12 - y) * 13 + (12 - x)]);
      sum += k[y * 13 + x];
    }
  }
  EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST(Blur, EmptyMaskIsIdentity) {
  diff::Rng rng(3);
  const Image img = testing::random_image(20, 17, rng);
  const auto sub = blur_subimage(img, ObjectMask{4, "x", Mask(20, 17)});
  EXPECT_EQ(sub.image, img);
  EXPECT_EQ(sub.source_id, 4);
}

TEST(Blur, ConstantImageUnchanged) {
  const Image img(16, 16, 0.42f);
  const auto sub = blur_subimage(img, ObjectMask{0, "x", box_mask(16, 16, 2, 3, 9, 7)});
  for (float v : sub.image.data) EXPECT_NEAR(v, 0.42f, 1e-6);
}

TEST(Blur, ImpulseGivesCentreWeight) {
  Image img(31, 31);
  for (int c = 0; c < 3; ++c) img.at(15, 15, c) = 1.0f;
  const auto sub = blur_subimage(img, ObjectMask{0, "x", box_mask(31, 31, 14, 14, 3, 3)});
  double total = 0.0;
  for (int y = -6; y <= 6; ++y) {
    for (int x = -6; x <= 6; ++x) total += std::exp(-(x * x + y * y) / 2.0);
  }
  EXPECT_NEAR(sub.image.at(15, 15, 0), 1.0 / total, 1e-6);
  EXPECT_NEAR(sub.image.at(15, 16, 2), std::exp(-0.5) / total, 1e-6);
  // Outside the mask the impulse does not spread.
  EXPECT_FLOAT_EQ(sub.image.at(15, 17, 0), 0.0f);
}

TEST(Blur, ReflectPaddingAtBorder) {
  // Impulse in the corner: reflection without edge repeat mirrors it to (0, 2) etc.
  Image img(20, 20);
  for (int c = 0; c < 3; ++c) img.at(0, 1, c) = 1.0f;
  const Image blurred = gaussian_blur(img);
  const auto taps = gaussian_taps();
  // Row factor at y=0 from source y=0; column factor at x=0 gets taps from x=1 and mirrored x=-1 -> 1.
  EXPECT_NEAR(blurred.at(0, 0, 0), taps[6] * 2.0 * taps[7], 1e-6);
}

TEST(Blur, OutsidePixelsBitIdentical) {
  diff::Rng rng(8);
  const Image img = testing::random_image(24, 24, rng);
  const Mask m = testing::random_mask(24, 24, rng, 0.4);
  const auto sub = blur_subimage(img, ObjectMask{0, "x", m});
  const Image full = gaussian_blur(img);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 24; ++x) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(sub.image.at(y, x, c), m.at(y, x) ? full.at(y, x, c) : img.at(y, x, c));
      }
    }
  }
  EXPECT_EQ(blur_subimage(img, full, ObjectMask{0, "x", m}).image, sub.image);
}

TEST(Blur, MatchesDirect2dConvolution) {
  diff::Rng rng(12);
  const Image img = testing::random_image(15, 18, rng);
  const Image fast = gaussian_blur(img);
  const auto k = gaussian_kernel();
  auto reflect = [](int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
  };
  for (int y = 0; y < 15; ++y) {
    for (int x = 0; x < 18; ++x) {
      double v = 0.0;
      for (int dy = -6; dy <= 6; ++dy) {
        for (int dx = -6; dx <= 6; ++dx) v += k[(dy + 6) * 13 + dx + 6] * img.at(reflect(y + dy, 15), reflect(x + dx, 18), 1);
      }
      ASSERT_NEAR(fast.at(y, x, 1), v, 1e-5) << y << "," << x;
    }
  }
}

TEST(Detect, OraclePassThroughRenumbers) {
  const std::vector<ObjectMask> masks = {{7, "a", box_mask(8, 8, 0, 0, 2, 2)},
                                         {3, "b", box_mask(8, 8, 4, 4, 2, 2)},
                                         {9, "c", box_mask(8, 8, 0, 5, 3, 3)}};
  const auto out = detect_objects(Image(8, 8), DetectionMode::kOracle, masks);
  ASSERT_EQ(out.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(out[i].id, i);
    EXPECT_EQ(out[i].label, masks[i].label);
    EXPECT_EQ(out[i].mask, masks[i].mask);
  }
}

TEST(Detect, OracleWithoutMasksThrows) {
  EXPECT_ANY_THROW(detect_objects(Image(8, 8), DetectionMode::kOracle));
}

TEST(Detect, UniformImageHasNoObjects) {
  EXPECT_TRUE(detect_objects(Image(64, 64), DetectionMode::kHeuristic).empty());
}

TEST(Detect, RedSquareOnBlack) {
  Image img(64, 64);
  const Mask square = box_mask(64, 64, 20, 30, 10, 10);
  for (int y = 30; y < 40; ++y) {
    for (int x = 20; x < 30; ++x) img.at(y, x, 0) = 1.0f;
  }
  const auto out = detect_objects(img, DetectionMode::kHeuristic);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_GE(mask_iou(out[0].mask, square), 0.9);
}

TEST(Detect, HeuristicMasksDisjointOnScenes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = scenes::generate_scene(seed);
    const auto out = detect_objects(s.image, DetectionMode::kHeuristic);
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_EQ(out[i].id, static_cast<int>(i));
      EXPECT_GE(out[i].mask.area(), static_cast<std::size_t>(0.005 * 64 * 64));
      for (std::size_t j = i + 1; j < out.size(); ++j) EXPECT_EQ(mask_iou(out[i].mask, out[j].mask), 0.0);
    }
  }
}

TEST(Detect, ParseMode) {
  EXPECT_EQ(parse_detection_mode("oracle"), DetectionMode::kOracle);
  EXPECT_EQ(parse_detection_mode("heuristic"), DetectionMode::kHeuristic);
  EXPECT_FALSE(parse_detection_mode("magic").has_value());
}

}  // namespace
}  // namespace declutter::segmentation
