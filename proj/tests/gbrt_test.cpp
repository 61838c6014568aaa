/*
 * Copyright 2026 The reachcast Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "reachcast/gbrt.hpp"
#include "regressor_support.hpp"

namespace rc = reachcast;
using rc::testing::random_pair_dataset;
using rc::testing::training_mse;

namespace {

// One-dimensional embedding with values {-1, -0.5, 0.5, 1} spread evenly over the
// nodes; the label is a step in the source value.
rc::Dataset step_dataset() {
  const double vals[] = {-1.0, -0.5, 0.5, 1.0};
  return rc::testing::pair_dataset(
      40, 1, [&](std::size_t i, std::size_t) { return vals[i % 4]; },
      [](std::span<const double> x) { return x[0] >= 0.0 ? 1.0 : 0.0; });
}

TEST(GbrtTrain, ZeroTreesPredictsMean) {
  auto ds = random_pair_dataset(15, 2, 1, [](auto x) { return std::abs(x[1]) / 2; });
  double mean = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) mean += ds.label(i);
  mean /= static_cast<double>(ds.size());
  rc::GbrtConfig cfg;
  cfg.trees = 0;
  auto res = rc::train_gbrt(ds, cfg, 1);
  std::vector<double> x{0.3, -0.2, 0.9, 0.1};
  EXPECT_NEAR(res.model.predict(x), mean, 1e-12);
  ASSERT_EQ(res.stage_losses.size(), 1u);
}

TEST(GbrtTrain, SingleStumpRecoversStep) {
  auto ds = step_dataset();
  rc::GbrtConfig cfg;
  cfg.trees = 1;
  cfg.max_depth = 1;
  cfg.shrinkage = 1.0;
  auto res = rc::train_gbrt(ds, cfg, 2);
  EXPECT_LT(training_mse(ds, [&](auto x) { return res.model.predict(x); }), 0.01);
  ASSERT_EQ(res.model.trees().size(), 1u);
  const auto root = res.model.trees()[0].nodes()[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_GT(root.threshold, -0.5);
  EXPECT_LE(root.threshold, 0.5);
}

TEST(GbrtTrain, StageLossesNonIncreasing) {
  auto ds = random_pair_dataset(30, 3, 3, [](auto x) { return std::clamp(0.5 + x[0] * x[4], 0.0, 1.0); });
  rc::GbrtConfig cfg;
  cfg.trees = 40;
  cfg.max_depth = 3;
  auto res = rc::train_gbrt(ds, cfg, 3);
  ASSERT_EQ(res.stage_losses.size(), 41u);
  for (std::size_t t = 1; t < res.stage_losses.size(); ++t)
    EXPECT_LE(res.stage_losses[t], res.stage_losses[t - 1] + 1e-12) << "stage " << t;
  EXPECT_LT(res.stage_losses.back(), 0.5 * res.stage_losses.front());
}

TEST(GbrtTrain, StageLossMatchesModel) {
  auto ds = random_pair_dataset(20, 2, 4, [](auto x) { return x[2] > 0.2 ? 0.8 : 0.1; });
  rc::GbrtConfig cfg;
  cfg.trees = 10;
  auto res = rc::train_gbrt(ds, cfg, 4);
  // Labels sit inside [0, 1] so clipping cannot lower the error below the raw loss.
  const double raw = training_mse(ds, [&](auto x) { return res.model.raw(x); });
  EXPECT_NEAR(raw, res.stage_losses.back(), 1e-12);
}

TEST(GbrtTrain, DeterministicAndWorkerIndependent) {
  auto ds = random_pair_dataset(25, 3, 5, [](auto x) { return std::abs(x[0] - x[3]) / 2; });
  rc::GbrtConfig cfg;
  cfg.trees = 15;
  cfg.subsample = 0.7;
  auto a = rc::train_gbrt(ds, cfg, 9);
  auto b = rc::train_gbrt(ds, cfg, 9);
  cfg.workers = 4;
  auto c = rc::train_gbrt(ds, cfg, 9);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.model, c.model);
  EXPECT_EQ(a.stage_losses, c.stage_losses);
}

TEST(GbrtTrain, TreesRespectDepth) {
  auto ds = random_pair_dataset(25, 2, 6, [](auto x) { return std::abs(x[0]); });
  rc::GbrtConfig cfg;
  cfg.trees = 5;
  cfg.max_depth = 2;
  auto res = rc::train_gbrt(ds, cfg, 1);
  for (const auto& t : res.model.trees()) EXPECT_LE(t.depth(), 2u);
}

TEST(GbrtTrain, OutputClipped) {
  auto ds = step_dataset();
  rc::GbrtConfig cfg;
  cfg.trees = 3;
  cfg.max_depth = 1;
  cfg.shrinkage = 1.5;  // overshoots the labels on purpose
  auto res = rc::train_gbrt(ds, cfg, 1);
  std::vector<double> x(2);
  for (double v : {-1.0, 1.0}) {
    x[0] = v;
    EXPECT_GE(res.model.predict(x), 0.0);
    EXPECT_LE(res.model.predict(x), 1.0);
  }
}

TEST(GbrtTrain, Errors) {
  rc::Dataset empty(rc::EmbeddingMatrix(2, 2), {});
  EXPECT_THROW(rc::train_gbrt(empty, rc::GbrtConfig{}, 1), rc::TrainingError);
  auto ds = step_dataset();
  rc::GbrtConfig bad;
  bad.candidate_thresholds = 256;
  EXPECT_THROW(rc::train_gbrt(ds, bad, 1), rc::ParameterError);
  bad = {};
  bad.subsample = 0.0;
  EXPECT_THROW(rc::train_gbrt(ds, bad, 1), rc::ParameterError);
}

TEST(GbrtQuantiles, DistinctAndAboveMinimum) {
  std::vector<double> v{3, 3, 3, 1, 1, 2, 2, 2, 2, 5};
  auto th = rc::detail::quantile_thresholds(v, 8);
  ASSERT_FALSE(th.empty());
  EXPECT_TRUE(std::is_sorted(th.begin(), th.end()));
  EXPECT_EQ(std::adjacent_find(th.begin(), th.end()), th.end());
  for (double t : th) {
    EXPECT_GT(t, 1.0);
    EXPECT_NE(std::find(v.begin(), v.end(), t), v.end());
  }
  EXPECT_TRUE(rc::detail::quantile_thresholds({4, 4, 4}, 5).empty());
}

}  // namespace
