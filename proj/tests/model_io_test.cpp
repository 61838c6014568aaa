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

#include <sstream>

#include <gtest/gtest.h>

#include "reachcast/model_io.hpp"
#include "reachcast/predict.hpp"
#include "regressor_support.hpp"

namespace rc = reachcast;

namespace {

rc::Dataset sample_data() {
  return rc::testing::random_pair_dataset(15, 3, 11, [](auto x) { return std::clamp(0.5 + 0.3 * x[0] - 0.2 * x[5], 0.0, 1.0); });
}

rc::MlpModel trained_mlp() {
  rc::MlpConfig cfg;
  cfg.hidden = {7, 5};
  cfg.epochs = 3;
  return rc::train_mlp(sample_data(), cfg, 1).model;
}

rc::GbrtModel trained_gbrt() {
  rc::GbrtConfig cfg;
  cfg.trees = 12;
  return rc::train_gbrt(sample_data(), cfg, 1).model;
}

template <class M>
std::string serialize(const M& m) {
  std::ostringstream out;
  rc::save_model(out, m);
  return out.str();
}

void expect_same_predictions(const rc::Model& a, const rc::Model& b) {
  rc::Rng rng = rc::make_rng(3);
  std::vector<double> x(rc::input_dim(a));
  for (int i = 0; i < 100; ++i) {
    for (double& v : x) v = 4 * rc::uniform01(rng) - 2;
    EXPECT_EQ(rc::predict(a, x), rc::predict(b, x));
  }
}

TEST(ModelIo, MlpRoundTripIsExact) {
  const auto m = trained_mlp();
  std::istringstream in(serialize(m));
  const auto back = rc::load_mlp(in);
  EXPECT_EQ(back, m);
  expect_same_predictions(m, back);
}

TEST(ModelIo, GbrtRoundTripIsExact) {
  const auto m = trained_gbrt();
  std::istringstream in(serialize(m));
  const auto back = rc::load_gbrt(in);
  EXPECT_EQ(back, m);
  expect_same_predictions(m, back);
}

TEST(ModelIo, GenericLoadKeepsType) {
  std::istringstream a(serialize(trained_mlp())), b(serialize(trained_gbrt()));
  EXPECT_TRUE(std::holds_alternative<rc::MlpModel>(rc::load_model(a)));
  EXPECT_TRUE(std::holds_alternative<rc::GbrtModel>(rc::load_model(b)));
}

TEST(ModelIo, WrongTypeRejected) {
  std::istringstream a(serialize(trained_mlp()));
  EXPECT_THROW(rc::load_gbrt(a), rc::ModelTypeError);
  std::istringstream b(serialize(trained_gbrt()));
  EXPECT_THROW(rc::load_mlp(b), rc::ModelTypeError);
}

TEST(ModelIo, HeaderChecks) {
  std::istringstream empty("");
  EXPECT_THROW(rc::load_model(empty), rc::FormatError);
  std::istringstream junk("hello world\n");
  EXPECT_THROW(rc::load_model(junk), rc::FormatError);
  std::string text = serialize(trained_mlp());
  text.replace(text.find(" v1 "), 4, " v9 ");
  std::istringstream version(text);
  EXPECT_THROW(rc::load_model(version), rc::FormatError);
  std::istringstream unknown("reachcast-model v1 forest\n");
  EXPECT_THROW(rc::load_model(unknown), rc::FormatError);
}

TEST(ModelIo, TruncationDetected) {
  for (const std::string full : {serialize(trained_mlp()), serialize(trained_gbrt())}) {
    for (double frac : {0.2, 0.5, 0.9}) {
      std::string cut = full.substr(0, static_cast<std::size_t>(frac * static_cast<double>(full.size())));
      cut = cut.substr(0, cut.rfind('\n') + 1);
      std::istringstream in(cut);
      EXPECT_THROW(rc::load_model(in), rc::FormatError) << "cut at " << frac;
    }
  }
}

TEST(ModelIo, CorruptNumberDetected) {
  std::string text = serialize(trained_gbrt());
  const auto pos = text.find("shrinkage ");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 10, "shrinkage x");
  std::istringstream in(text);
  EXPECT_THROW(rc::load_model(in), rc::FormatError);
}

}  // namespace
