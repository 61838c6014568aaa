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
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "reachcast/embedding.hpp"
#include "reachcast/generators.hpp"
#include "reachcast/skipgram.hpp"
#include "reachcast/walks.hpp"
#include "test_support.hpp"

namespace rc = reachcast;
using rc::testing::graph_from_pairs;

namespace {

rc::WalkConfig small_config(std::size_t dims = 8) {
  rc::WalkConfig cfg;
  cfg.dimensions = dims;
  cfg.walk_length = 10;
  cfg.window = 3;
  cfg.walks_per_node = 5;
  cfg.epochs = 2;
  return cfg;
}

TEST(Walks, IsolatedNodeGivesSingletonWalks) {
  auto g = graph_from_pairs(2, {});
  auto corpus = rc::generate_walks(g, small_config(), 1);
  ASSERT_EQ(corpus.size(), 10u);
  for (const auto& w : corpus) EXPECT_EQ(w.size(), 1u);
}

TEST(Walks, ForcedPathStopsAtDeadEnd) {
  auto g = graph_from_pairs(4, {{0, 1}, {1, 2}, {2, 3}});
  auto cfg = small_config();
  cfg.walk_length = 20;
  for (const auto& w : rc::generate_walks(g, cfg, 3)) {
    if (w.front() == 0) EXPECT_EQ(w, (rc::Walk{0, 1, 2, 3}));
  }
}

TEST(Walks, UniformFirstStepOnStar) {
  auto g = graph_from_pairs(4, {{0, 1}, {0, 2}, {0, 3}});
  std::map<rc::NodeId, int> first;
  std::vector<double> scratch;
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    rc::Rng rng = rc::make_rng(5, i);
    ++first[rc::biased_walk(g, 0, 5, 1.0, 1.0, rng, scratch)[1]];
  }
  for (rc::NodeId v : {1u, 2u, 3u}) EXPECT_NEAR(first[v] / static_cast<double>(n), 1.0 / 3.0, 0.01);
}

TEST(Walks, SecondOrderFrequenciesMatchWeights) {
  // From 0 the walk moves to 1 or 2; we condition on arriving at 1 from 0. Out of 1:
  // back to 0 weighs 1/p = 2, node 2 (an out-neighbor of 0) weighs 1, nodes 3 and 4
  // weigh 1/q = 0.5. Expected frequencies 0.5, 0.25, 0.125, 0.125.
  auto g = graph_from_pairs(5, {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {1, 3}, {1, 4}});
  const std::map<rc::NodeId, double> expected{{0, 0.5}, {2, 0.25}, {3, 0.125}, {4, 0.125}};
  std::map<rc::NodeId, int> counts;
  std::vector<double> scratch;
  int samples = 0;
  for (int i = 0; samples < 10000; ++i) {
    rc::Rng rng = rc::make_rng(17, i);
    auto w = rc::biased_walk(g, 0, 3, 0.5, 2.0, rng, scratch);
    if (w.size() < 3 || w[1] != 1) continue;
    ++counts[w[2]];
    ++samples;
  }
  for (auto [v, p] : expected) {
    const double sigma = std::sqrt(samples * p * (1 - p));
    EXPECT_NEAR(counts[v], samples * p, 3 * sigma) << "next node " << v;
  }
  EXPECT_EQ(counts.count(1), 0u);
}

TEST(Walks, TransitionWeights) {
  auto g = graph_from_pairs(4, {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {1, 3}});
  EXPECT_DOUBLE_EQ(rc::transition_weight(g, 0, 0, 0.5, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(rc::transition_weight(g, 0, 2, 0.5, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(rc::transition_weight(g, 0, 3, 0.5, 2.0), 0.5);
}

TEST(Walks, CorpusSizeBound) {
  auto cfg = small_config();
  auto dense = rc::scale_free_directed(60, {}, 1);  // every node has out-edges
  std::size_t tokens = 0;
  for (const auto& w : rc::generate_walks(dense, cfg, 2)) tokens += w.size();
  EXPECT_EQ(tokens, 60 * cfg.walks_per_node * cfg.walk_length);

  auto sparse = rc::random_directed(60, 50, 1);
  tokens = 0;
  for (const auto& w : rc::generate_walks(sparse, cfg, 2)) tokens += w.size();
  EXPECT_LT(tokens, 60 * cfg.walks_per_node * cfg.walk_length);
}

TEST(Walks, WorkerCountDoesNotChangeCorpus) {
  auto g = rc::scale_free_directed(80, {}, 2);
  auto cfg = small_config();
  EXPECT_EQ(rc::generate_walks(g, cfg, 9, 1), rc::generate_walks(g, cfg, 9, 4));
}

TEST(Walks, ConfigValidation) {
  auto cfg = small_config();
  cfg.return_param = 0;
  EXPECT_THROW(cfg.validate(), rc::ParameterError);
  cfg = small_config();
  cfg.window = 50;
  EXPECT_THROW(cfg.validate(), rc::ParameterError);
}

TEST(SkipGram, GradientMatchesFiniteDifferences) {
  rc::Rng rng = rc::make_rng(3);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 6, k = 3;
    auto random_vec = [&] {
      std::vector<double> v(d);
      for (double& x : v) x = rc::uniform01(rng) * 2 - 1;
      return v;
    };
    std::vector<double> in = random_vec(), ctx = random_vec();
    std::vector<std::vector<double>> negs;
    for (std::size_t j = 0; j < k; ++j) negs.push_back(random_vec());
    auto objective = [&] {
      std::vector<std::span<const double>> ns(negs.begin(), negs.end());
      return rc::sgns_objective(in, ctx, ns);
    };
    std::vector<std::span<const double>> ns(negs.begin(), negs.end());
    auto grad = rc::sgns_gradient(in, ctx, ns);
    auto check = [&](std::vector<double>& x, const std::vector<double>& analytic) {
      for (std::size_t i = 0; i < d; ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = objective();
        x[i] = keep - h;
        const double down = objective();
        x[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double rel = std::abs(numeric - analytic[i]) / std::max(1e-8, std::abs(numeric) + std::abs(analytic[i]));
        EXPECT_LT(rel, 1e-4);
      }
    };
    check(in, grad.input);
    check(ctx, grad.context);
    for (std::size_t j = 0; j < k; ++j) check(negs[j], grad.negatives[j]);
  }
}

TEST(SkipGram, StepFollowsGradient) {
  // A small step must raise the per-pair objective.
  std::vector<double> in{0.1, -0.2, 0.3}, ctx{0.05, 0.1, -0.1}, neg{0.2, 0.2, 0.2}, scratch(3);
  auto value = [&] {
    std::vector<std::span<const double>> ns{neg};
    return rc::sgns_objective(in, ctx, ns);
  };
  const double before = value();
  std::vector<std::span<double>> ns{neg};
  rc::sgns_step(std::span<double>(in), std::span<double>(ctx), ns, 0.05, scratch);
  EXPECT_GT(value(), before);
}

TEST(SkipGram, ObjectiveImprovesOnFixedCorpus) {
  const rc::WalkCorpus corpus{{0, 1, 2, 3, 0, 1, 2, 3}, {4, 5, 6, 4, 5, 6}, {0, 2, 1, 3}, {6, 5, 4, 6}};
  auto cfg = small_config(8);
  cfg.epochs = 50;
  cfg.window = 2;
  rc::SkipGramTrainer trainer(7, cfg, 11);
  const double before = trainer.mean_objective(corpus, 99);
  trainer.fit(corpus);
  EXPECT_GT(trainer.mean_objective(corpus, 99), before);
}

TEST(SkipGram, EmptyCorpusIsTrainingError) {
  rc::WalkCorpus corpus;
  EXPECT_THROW(rc::train_skipgram(corpus, 3, small_config(), 1), rc::TrainingError);
}

TEST(SkipGram, ShapeAndFiniteness) {
  auto g = rc::scale_free_directed(50, {}, 3);
  auto emb = rc::embed_graph(g, small_config(12), 4);
  EXPECT_EQ(emb.rows(), 50u);
  EXPECT_EQ(emb.dims(), 12u);
  EXPECT_TRUE(emb.all_finite());
}

TEST(SkipGram, DeterministicModeIsReproducible) {
  auto g = rc::scale_free_directed(60, {}, 3);
  auto cfg = small_config(10);
  auto a = rc::embed_graph(g, cfg, 8, 1);
  auto b = rc::embed_graph(g, cfg, 8, 4);
  EXPECT_EQ(a, b);
}

TEST(SkipGram, FastModeProducesFiniteVectors) {
  auto g = rc::scale_free_directed(60, {}, 3);
  auto cfg = small_config(10);
  cfg.mode = rc::TrainingMode::fast;
  cfg.workers = 3;
  EXPECT_TRUE(rc::embed_graph(g, cfg, 8, 3).all_finite());
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i], aa += a[i] * a[i], bb += b[i] * b[i];
  return ab / std::sqrt(aa * bb);
}

TEST(SkipGram, TwoCliquesSeparate) {
  std::vector<rc::Edge> edges;
  for (rc::NodeId base : {0u, 6u})
    for (rc::NodeId i = 0; i < 6; ++i)
      for (rc::NodeId j = 0; j < 6; ++j)
        if (i != j) edges.push_back({base + i, base + j});
  edges.push_back({5, 6});
  auto g = rc::DirectedGraph::from_edges(12, edges);
  rc::WalkConfig cfg;
  cfg.dimensions = 16;
  cfg.walk_length = 20;
  cfg.window = 5;
  cfg.walks_per_node = 20;
  cfg.epochs = 5;
  auto emb = rc::embed_graph(g, cfg, 21);
  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (rc::NodeId u = 0; u < 12; ++u)
    for (rc::NodeId v = u + 1; v < 12; ++v) {
      const double c = cosine(emb.row(u), emb.row(v));
      if ((u < 6) == (v < 6)) intra += c, ++ni;
      else inter += c, ++nx;
    }
  EXPECT_GT(intra / ni, inter / nx);
}

TEST(EmbeddingFile, RoundTrip) {
  auto g = rc::scale_free_directed(30, {}, 2);
  auto emb = rc::embed_graph(g, small_config(7), 5);
  std::ostringstream out;
  rc::save_embeddings(out, emb, g.labels());
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "30 7");
  std::istringstream in(out.str());
  auto back = rc::load_embeddings(in);
  ASSERT_EQ(back.matrix.rows(), 30u);
  ASSERT_EQ(back.matrix.dims(), 7u);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t k = 0; k < 7; ++k) EXPECT_NEAR(back.matrix(i, k), emb(i, k), 1e-7);
  EXPECT_TRUE(std::equal(back.labels.begin(), back.labels.end(), g.labels().begin()));
}

TEST(EmbeddingFile, InconsistentWidthIsFormatError) {
  std::istringstream in("2 3\na 1 2 3\nb 1 2\n");
  EXPECT_THROW(rc::load_embeddings(in), rc::FormatError);
}

TEST(EmbeddingFile, TruncatedIsFormatError) {
  std::istringstream in("3 2\na 1 2\nb 1 2\n");
  EXPECT_THROW(rc::load_embeddings(in), rc::FormatError);
}

}  // namespace
