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

#include <gtest/gtest.h>

#include "reachcast/mlp.hpp"
#include "regressor_support.hpp"

namespace rc = reachcast;
using rc::testing::random_pair_dataset;
using rc::testing::training_mse;

namespace {

TEST(MlpGradient, TwoHiddenUnits) {
  rc::Rng rng = rc::make_rng(1);
  std::vector<std::size_t> hidden{2};
  auto model = rc::init_mlp(3, hidden, rng);
  for (auto& b : model.biases()) b.setConstant(0.1);
  Eigen::MatrixXd x(3, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rc::uniform01(rng) * 2 - 1;
  Eigen::RowVectorXd y(5);
  for (Eigen::Index i = 0; i < 5; ++i) y(i) = rc::uniform01(rng);
  ASSERT_FALSE(rc::testing::mlp_near_kink(model, x));
  EXPECT_LT(rc::testing::mlp_gradient_error(model, x, y, 1e-3), 1e-4);
}

TEST(MlpGradient, RandomSmallNetworks) {
  const auto sweep = rc::testing::mlp_gradient_sweep(20, 2);
  EXPECT_EQ(sweep.networks, 20);
  EXPECT_LT(sweep.worst, 1e-4);
}

TEST(MlpPredict, ZeroNetworkPredictsZero) {
  std::vector<std::size_t> hidden{4};
  rc::MlpModel m(3, hidden);
  std::vector<double> x{0.3, -2.0, 7.0};
  EXPECT_EQ(m.predict(x), 0.0);
}

TEST(MlpPredict, OutputClippedToUnitInterval) {
  rc::Rng rng = rc::make_rng(5);
  std::vector<std::size_t> hidden{8};
  auto m = rc::init_mlp(4, hidden, rng);
  for (auto& w : m.weights()) w *= 25.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(4);
    for (double& v : x) v = (rc::uniform01(rng) - 0.5) * 100;
    const double p = m.predict(x);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(MlpPredict, DimensionMismatch) {
  std::vector<std::size_t> hidden{2};
  rc::MlpModel m(3, hidden);
  std::vector<double> x{1, 2};
  EXPECT_THROW(m.predict(x), rc::DimensionError);
}

TEST(MlpTrain, ConstantTarget) {
  auto ds = random_pair_dataset(30, 3, 1, [](auto) { return 0.37; });
  rc::MlpConfig cfg;
  cfg.hidden = {16};
  cfg.epochs = 100;
  cfg.batch_size = 64;
  cfg.learning_rate = 1e-2;
  auto res = rc::train_mlp(ds, cfg, 3);
  // Root-mean-square distance from the constant.
  EXPECT_LT(training_mse(ds, [&](auto x) { return res.model.predict(x); }), 1e-4);
}

TEST(MlpTrain, LinearTarget) {
  const std::vector<double> w{0.4, -0.3, 0.2, 0.1, 0.25, -0.15};
  auto target = [&](std::span<const double> x) {
    double s = 0.5;
    for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * x[k];
    return std::clamp(s, 0.0, 1.0);
  };
  auto ds = random_pair_dataset(72, 3, 2, target);  // 5,112 rows
  ASSERT_GE(ds.size(), 5000u);
  rc::MlpConfig cfg;
  cfg.hidden = {32};
  cfg.epochs = 60;
  cfg.batch_size = 64;
  cfg.learning_rate = 3e-3;
  cfg.l2 = 0.0;
  auto res = rc::train_mlp(ds, cfg, 4);
  EXPECT_LT(training_mse(ds, [&](auto x) { return res.model.predict(x); }), 1e-3);
}

TEST(MlpTrain, DeterministicAndWorkerIndependent) {
  auto ds = random_pair_dataset(25, 2, 3, [](auto x) { return std::abs(x[0] * x[3]); });
  rc::MlpConfig cfg;
  cfg.hidden = {10};
  cfg.epochs = 3;
  cfg.batch_size = 200;
  auto a = rc::train_mlp(ds, cfg, 5);
  auto b = rc::train_mlp(ds, cfg, 5);
  cfg.workers = 4;
  auto c = rc::train_mlp(ds, cfg, 5);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.model, c.model);
  EXPECT_EQ(a.epoch_losses, c.epoch_losses);
}

TEST(MlpTrain, EmptyDataset) {
  rc::Dataset empty(rc::EmbeddingMatrix(2, 2), {});
  EXPECT_THROW(rc::train_mlp(empty, rc::MlpConfig{}, 1), rc::TrainingError);
}

TEST(MlpTrain, DivergenceNamesEpoch) {
  auto ds = random_pair_dataset(20, 2, 3, [](auto x) { return x[0] > 0 ? 1.0 : 0.0; });
  rc::MlpConfig cfg;
  cfg.hidden = {8};
  cfg.epochs = 5;
  cfg.learning_rate = 1e300;
  try {
    rc::train_mlp(ds, cfg, 1);
    FAIL() << "expected divergence";
  } catch (const rc::TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(MlpTrain, StandardizationFoldedIntoModel) {
  // Feature scale 1000x larger than labels; raw inputs must still work at predict.
  auto ds = rc::testing::pair_dataset(
      20, 1, [](std::size_t i, std::size_t) { return 1000.0 + 50.0 * static_cast<double>(i); },
      [](std::span<const double> x) { return (x[0] - 1000.0) / 1000.0; });
  rc::MlpConfig cfg;
  cfg.hidden = {16};
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.learning_rate = 3e-3;
  cfg.l2 = 0.0;
  auto res = rc::train_mlp(ds, cfg, 2);
  EXPECT_LT(training_mse(ds, [&](auto x) { return res.model.predict(x); }), 2e-3);
  EXPECT_NEAR(res.model.feature_mean()(0), 1475.0, 1e-9);
}

}  // namespace
