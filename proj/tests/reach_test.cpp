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
#include <sstream>

#include <gtest/gtest.h>

#include "reachcast/generators.hpp"
#include "reachcast/icm.hpp"
#include "reachcast/reach.hpp"
#include "test_support.hpp"

namespace rc = reachcast;
using rc::testing::dense;
using rc::testing::graph_from_pairs;

namespace {

rc::CascadeSet cascades_on(std::size_t n, int r, std::initializer_list<std::vector<std::vector<rc::NodeId>>> list) {
  rc::CascadeSet cs;
  cs.r_nominal = r;
  cs.fingerprint = {n, 0};
  for (const auto& steps : list) {
    rc::Cascade c(steps.front().front());
    for (std::size_t t = 1; t < steps.size(); ++t) c.append_step(steps[t]);
    cs.cascades.push_back(std::move(c));
  }
  return cs;
}

// Independent live-edge oracle: for every subset of edges compute reachability by
// repeated relaxation over the kept edge list.
std::vector<double> live_edge_reach(const rc::DirectedGraph& g, std::span<const double> p, rc::NodeId u) {
  const std::size_t n = g.node_count(), m = g.edge_count();
  std::vector<double> out(n, 0.0);
  for (std::uint64_t mask = 0; mask < (1ull << m); ++mask) {
    double w = 1;
    for (std::size_t e = 0; e < m; ++e) w *= (mask >> e & 1) ? p[e] : 1 - p[e];
    std::vector<bool> on(n, false);
    on[u] = true;
    for (std::size_t round = 0; round < n; ++round)
      for (std::size_t e = 0; e < m; ++e)
        if ((mask >> e & 1) && on[g.edge(static_cast<rc::EdgeId>(e)).src]) on[g.edge(static_cast<rc::EdgeId>(e)).dst] = true;
    for (std::size_t v = 0; v < n; ++v) out[v] += on[v] ? w : 0;
  }
  out[u] = 1.0;
  return out;
}

TEST(EstimateReach, SingleCascadePerSeedCount) {
  auto cs = cascades_on(2, 1, {{{0}, {1}}});
  auto m = rc::estimate_reach(cs, rc::DivisorMode::per_seed_count);
  EXPECT_EQ(m.at(0, 0), 1.0);
  EXPECT_EQ(m.at(0, 1), 1.0);
  EXPECT_EQ(m.at(1, 0), 0.0);
}

TEST(EstimateReach, HalfUnderNominalDivisor) {
  auto cs = cascades_on(4, 2, {{{0}, {1, 2}}, {{0}, {2}, {3}}});
  auto m = rc::estimate_reach(cs, rc::DivisorMode::nominal_r);
  EXPECT_EQ(m.at(0, 0), 1.0);
  EXPECT_EQ(m.at(0, 1), 0.5);
  EXPECT_EQ(m.at(0, 2), 1.0);
  EXPECT_EQ(m.at(0, 3), 0.5);
}

TEST(EstimateReach, NominalDivisorRejectsOverfullSeed) {
  auto cs = cascades_on(2, 1, {{{0}}, {{0}}});
  EXPECT_THROW(rc::estimate_reach(cs, rc::DivisorMode::nominal_r), rc::ConsistencyError);
  EXPECT_NO_THROW(rc::estimate_reach(cs, rc::DivisorMode::per_seed_count));
}

TEST(EstimateReach, PartialSeedsDifferByDivisor) {
  // One of r = 4 cascades from seed 0 survived sampling.
  auto cs = cascades_on(2, 4, {{{0}, {1}}});
  EXPECT_EQ(rc::estimate_reach(cs, rc::DivisorMode::nominal_r).at(0, 1), 0.25);
  EXPECT_EQ(rc::estimate_reach(cs, rc::DivisorMode::per_seed_count).at(0, 1), 1.0);
  EXPECT_TRUE(rc::estimate_reach(cs, rc::DivisorMode::per_seed_count).row(1).empty());
}

TEST(EstimateReach, EntriesInRangeAndDiagonalOne) {
  auto g = rc::scale_free_directed(120, {}, 3);
  auto cs = rc::generate_cascade_set(g, rc::assign_probabilities(g, 0.1, 2), 7, 4);
  auto part = rc::sample_portion(cs, 0.3, 9);
  auto m = rc::estimate_reach(part, rc::DivisorMode::per_seed_count);
  for (rc::NodeId u = 0; u < m.node_count(); ++u) {
    if (m.seed_count(u) > 0) EXPECT_EQ(m.at(u, u), 1.0);
    for (const auto& e : m.row(u)) {
      EXPECT_GT(e.probability, 0.0);
      EXPECT_LE(e.probability, 1.0);
    }
  }
}

TEST(EstimateReach, PositiveEntriesAreReachable) {
  auto g = rc::random_directed(40, 70, 8);
  auto cs = rc::generate_cascade_set(g, rc::assign_probabilities(g, 0.8, 2), 10, 4);
  auto m = rc::estimate_reach(cs, rc::DivisorMode::nominal_r);
  for (rc::NodeId u = 0; u < g.node_count(); ++u) {
    std::vector<bool> seen(g.node_count(), false);
    std::vector<rc::NodeId> stack{u};
    seen[u] = true;
    while (!stack.empty()) {
      auto a = stack.back();
      stack.pop_back();
      for (auto b : g.out_neighbors(a))
        if (!seen[b]) seen[b] = true, stack.push_back(b);
    }
    for (const auto& e : m.row(u)) EXPECT_TRUE(seen[e.dst]);
  }
}

TEST(EstimateReach, MergeIsCountWeightedAverage) {
  auto g = rc::scale_free_directed(60, {}, 5);
  auto probs = rc::assign_probabilities(g, 0.1, 6);
  auto a = rc::sample_portion(rc::generate_cascade_set(g, probs, 6, 1), 0.5, 2);
  auto b = rc::sample_portion(rc::generate_cascade_set(g, probs, 6, 3), 0.3, 4);
  rc::CascadeSet both = a;
  both.cascades.insert(both.cascades.end(), b.cascades.begin(), b.cascades.end());
  auto ma = rc::estimate_reach(a, rc::DivisorMode::per_seed_count);
  auto mb = rc::estimate_reach(b, rc::DivisorMode::per_seed_count);
  auto mab = rc::estimate_reach(both, rc::DivisorMode::per_seed_count);
  for (rc::NodeId u = 0; u < g.node_count(); ++u) {
    const double na = ma.seed_count(u), nb = mb.seed_count(u);
    if (na + nb == 0) continue;
    for (rc::NodeId v = 0; v < g.node_count(); ++v)
      EXPECT_NEAR(mab.at(u, v), (na * ma.at(u, v) + nb * mb.at(u, v)) / (na + nb), 1e-12);
  }
}

TEST(EstimateReach, WorkerCountDoesNotChangeResult) {
  auto g = rc::scale_free_directed(150, {}, 2);
  auto cs = rc::generate_cascade_set(g, rc::assign_probabilities(g, 0.1, 1), 5, 3);
  EXPECT_EQ(rc::estimate_reach(cs, rc::DivisorMode::nominal_r, 1), rc::estimate_reach(cs, rc::DivisorMode::nominal_r, 4));
}

TEST(BruteForce, NoEdges) {
  auto g = graph_from_pairs(3, {});
  rc::ActivationProbabilities p({}, 0.5);
  EXPECT_EQ(rc::exact_reach_bruteforce(g, p, 1), (std::vector<double>{0, 1, 0}));
}

TEST(BruteForce, SingleEdge) {
  auto g = graph_from_pairs(2, {{0, 1}});
  rc::ActivationProbabilities p({0.3}, 0.3);
  EXPECT_DOUBLE_EQ(rc::exact_reach_bruteforce(g, p, 0)[1], 0.3);
}

TEST(BruteForce, TriangleByHand) {
  // u->v, u->w, v->w at 0.5 each: w is reached directly (0.5) or, failing that,
  // through v (0.5 * 0.25).
  auto g = graph_from_pairs(3, {{0, 1}, {0, 2}, {1, 2}});
  rc::ActivationProbabilities p({0.5, 0.5, 0.5}, 0.5);
  EXPECT_DOUBLE_EQ(rc::exact_reach_bruteforce(g, p, 0)[2], 0.625);
}

TEST(BruteForce, MatchesIndependentEnumeration) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto g = rc::random_directed(6, 12, s);
    auto p = rc::assign_probabilities(g, 0.7, s + 10);
    for (rc::NodeId u = 0; u < g.node_count(); ++u) {
      auto got = rc::exact_reach_bruteforce(g, p, u);
      auto want = live_edge_reach(g, p.values(), u);
      for (std::size_t v = 0; v < got.size(); ++v) EXPECT_NEAR(got[v], want[v], 1e-12);
    }
  }
}

TEST(BruteForce, RefusesLargeGraphs) {
  auto g = rc::random_directed(8, 23, 1);
  auto p = rc::assign_probabilities(g, 0.5, 1);
  EXPECT_THROW(rc::exact_reach_bruteforce(g, p, 0), rc::ParameterError);
}

TEST(BruteForce, SimulationConverges) {
  auto g = rc::random_directed(5, 8, 21);
  auto p = rc::assign_probabilities(g, 0.5, 22);
  auto m = rc::estimate_reach(rc::generate_cascade_set(g, p, 200000, 23), rc::DivisorMode::nominal_r);
  for (rc::NodeId u = 0; u < g.node_count(); ++u) {
    auto exact = rc::exact_reach_bruteforce(g, p, u);
    for (rc::NodeId v = 0; v < g.node_count(); ++v) EXPECT_NEAR(m.at(u, v), exact[v], 0.01);
  }
}

TEST(Mae, IdenticalIsZero) {
  rc::ReachMatrix a(3);
  a.set_row(0, {{1, 0.4}, {2, 0.1}});
  EXPECT_EQ(rc::mae(a, a), 0.0);
}

TEST(Mae, SinglePairDifference) {
  rc::ReachMatrix a(4), b(4);
  a.set_row(2, {{3, 0.6}});
  EXPECT_DOUBLE_EQ(rc::mae(a, b), 0.05);
}

TEST(Mae, DiagonalIgnored) {
  rc::ReachMatrix a(2), b(2);
  a.set_row(0, {{0, 1.0}});
  EXPECT_EQ(rc::mae(a, b), 0.0);
}

TEST(Mae, NodeCountMismatch) { EXPECT_THROW(rc::mae(rc::ReachMatrix(2), rc::ReachMatrix(3)), rc::DimensionError); }

TEST(Mae, SymmetricAndTriangle) {
  auto random_matrix = [](std::uint64_t seed) {
    rc::Rng rng = rc::make_rng(seed);
    rc::ReachMatrix m(12);
    for (rc::NodeId u = 0; u < 12; ++u) {
      std::vector<rc::ReachEntry> row;
      for (rc::NodeId v = 0; v < 12; ++v)
        if (rc::uniform01(rng) < 0.4) row.push_back({v, rc::uniform01(rng)});
      m.set_row(u, row);
    }
    return m;
  };
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto a = random_matrix(3 * s), b = random_matrix(3 * s + 1), c = random_matrix(3 * s + 2);
    EXPECT_DOUBLE_EQ(rc::mae(a, b), rc::mae(b, a));
    EXPECT_LE(rc::mae(a, c), rc::mae(a, b) + rc::mae(b, c) + 1e-15);
    // Dense recomputation as an oracle.
    auto da = dense(a), db = dense(b);
    double sum = 0;
    for (std::size_t u = 0; u < 12; ++u)
      for (std::size_t v = 0; v < 12; ++v)
        if (u != v) sum += std::abs(da[u * 12 + v] - db[u * 12 + v]);
    EXPECT_NEAR(rc::mae(a, b), sum / 132.0, 1e-15);
  }
}

TEST(Mae, FullPortionBenchmarkIsZero) {
  auto g = rc::scale_free_directed(80, {}, 1);
  auto cs = rc::generate_cascade_set(g, rc::assign_probabilities(g, 0.1, 2), 20, 3);
  auto actual = rc::estimate_reach(cs, rc::DivisorMode::nominal_r);
  auto label = rc::estimate_reach(rc::sample_portion(cs, 1.0, 4), rc::DivisorMode::per_seed_count);
  EXPECT_EQ(label, actual);
  EXPECT_EQ(rc::mae(label, actual), 0.0);
}

TEST(ReachMatrix, RejectsBadRows) {
  rc::ReachMatrix m(3);
  EXPECT_THROW(m.set_row(0, {{1, 1.5}}), rc::ParameterError);
  EXPECT_THROW(m.set_row(0, {{1, 0.5}, {1, 0.2}}), rc::ParameterError);
  EXPECT_THROW(m.set_row(0, {{5, 0.5}}), rc::IndexError);
  EXPECT_THROW(m.row(4), rc::IndexError);
}

TEST(ReachFile, RoundTripWithinTenDigits) {
  auto g = rc::scale_free_directed(50, {}, 4);
  auto cs = rc::sample_portion(rc::generate_cascade_set(g, rc::assign_probabilities(g, 0.2, 1), 3, 2), 0.7, 1);
  auto m = rc::estimate_reach(cs, rc::DivisorMode::per_seed_count);
  std::ostringstream out;
  rc::save_reach(out, m, g.labels(), "label");
  std::istringstream in(out.str());
  auto back = rc::load_reach(in);
  EXPECT_EQ(back.mode, "label");
  EXPECT_EQ(back.matrix.seed_counts().size(), m.node_count());
  EXPECT_TRUE(std::equal(back.matrix.seed_counts().begin(), back.matrix.seed_counts().end(), m.seed_counts().begin()));
  EXPECT_LT(rc::mae(back.matrix, m), 1e-10);
}

TEST(ReachFile, AlignReordersNodes) {
  rc::ReachMatrix m(3);
  m.set_row(0, {{2, 0.5}});
  std::vector<std::string> from{"a", "b", "c"}, to{"c", "a", "b"};
  auto aligned = rc::align_reach(m, from, to);
  EXPECT_EQ(aligned.at(1, 0), 0.5);  // a -> c
}

}  // namespace
