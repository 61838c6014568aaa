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

// Synthetic directed graphs for experiments when no real network file is at hand.

#pragma once

#include <cstdint>
#include <vector>

#include "reachcast/graph.hpp"
#include "reachcast/random.hpp"

namespace reachcast {

struct ScaleFreeParams {
  std::size_t out_edges = 8;        // edges from each new node to existing nodes
  std::size_t in_edges = 8;         // edges from existing nodes to each new node
  std::size_t internal_edges = 20;  // edges among existing nodes per arrival
  double attraction = 2.0;          // added to every degree in the attachment weights
};

/// Directed preferential-attachment graph with densification.
///
/// Starts from a complete digraph on out_edges + 1 nodes. Each arriving node sends
/// out_edges edges to targets drawn with weight (in-degree + attraction) and receives
/// in_edges edges from sources drawn with weight (out-degree + attraction); then
/// internal_edges edges are added between existing nodes, source and target drawn
/// the same way. Degrees are heavy-tailed and the oldest nodes form a dense core.
/// Repeated picks and self-loops are dropped, so the edge count is slightly below
/// n * (out_edges + in_edges + internal_edges). The defaults give about 25k edges
/// at n = 1000.
inline DirectedGraph scale_free_directed(std::size_t n, const ScaleFreeParams& params, std::uint64_t seed) {
  if (params.out_edges == 0 || !(params.attraction > 0.0))
    throw ParameterError("scale_free_directed: out_edges and attraction must be positive");
  Rng rng = make_rng(seed);
  std::vector<Edge> edges;
  // Endpoint lists: a uniform element of by_in is a node drawn proportionally to
  // in-degree (likewise by_out).
  std::vector<NodeId> by_in, by_out;
  std::size_t present = 0;
  auto pick = [&](const std::vector<NodeId>& pool) {
    const double total = static_cast<double>(pool.size()) + params.attraction * static_cast<double>(present);
    if (uniform01(rng) * total < static_cast<double>(pool.size()))
      return pool[uniform_index(rng, pool.size())];
    return static_cast<NodeId>(uniform_index(rng, present));
  };
  auto add = [&](NodeId u, NodeId v) {
    if (u == v) return;
    edges.push_back({u, v});
    by_out.push_back(u);
    by_in.push_back(v);
  };
  const std::size_t core = std::min(n, params.out_edges + 1);
  present = core;
  for (NodeId u = 0; u < core; ++u)
    for (NodeId v = 0; v < core; ++v) add(u, v);
  for (auto u = static_cast<NodeId>(core); u < n; ++u) {
    for (std::size_t k = 0; k < params.out_edges; ++k) add(u, pick(by_in));
    for (std::size_t k = 0; k < params.in_edges; ++k) add(pick(by_out), u);
    present = std::size_t{u} + 1;
    for (std::size_t k = 0; k < params.internal_edges; ++k) add(pick(by_out), pick(by_in));
  }
  return DirectedGraph::from_edges(n, edges);
}

/// Uniform random digraph with exactly `m` distinct non-loop edges.
inline DirectedGraph random_directed(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n < 2 && m > 0) throw ParameterError("random_directed: need at least two nodes for edges");
  if (m > n * (n - 1)) throw ParameterError("random_directed: too many edges requested");
  Rng rng = make_rng(seed);
  std::vector<Edge> edges;
  std::vector<std::uint8_t> present(n * n, 0);
  while (edges.size() < m) {
    const auto u = static_cast<NodeId>(uniform_index(rng, n));
    const auto v = static_cast<NodeId>(uniform_index(rng, n));
    if (u == v || present[std::size_t{u} * n + v]) continue;
    present[std::size_t{u} * n + v] = 1;
    edges.push_back({u, v});
  }
  return DirectedGraph::from_edges(n, edges);
}

}  // namespace reachcast
