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

// Second-order biased random walks over out-edges.

#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "reachcast/error.hpp"
#include "reachcast/graph.hpp"
#include "reachcast/parallel.hpp"
#include "reachcast/random.hpp"

namespace reachcast {

enum class TrainingMode {
  deterministic,  // single worker, canonical update order
  fast,           // lock-free concurrent updates; not reproducible
};

struct WalkConfig {
  std::size_t dimensions = 128;
  std::size_t walk_length = 20;
  std::size_t window = 5;
  std::size_t walks_per_node = 10;
  double return_param = 1.0;  // p
  double inout_param = 1.0;   // q
  std::size_t epochs = 5;
  double initial_learning_rate = 0.025;
  std::size_t negatives_per_positive = 5;
  std::uint64_t seed = 1;
  TrainingMode mode = TrainingMode::deterministic;
  unsigned workers = 1;

  void validate() const {
    if (dimensions < 1 || walk_length < 1 || window < 1 || walks_per_node < 1 || epochs < 1 ||
        negatives_per_positive < 1)
      throw ParameterError("walk config counts must be at least 1");
    if (!(return_param > 0.0) || !(inout_param > 0.0) || !(initial_learning_rate > 0.0))
      throw ParameterError("p, q and learning rate must be positive");
    if (window > walk_length) throw ParameterError("window must not exceed walk length");
  }
};

using Walk = std::vector<NodeId>;
using WalkCorpus = std::vector<Walk>;

/// Unnormalized weight of stepping to `next` from `current` having arrived from
/// `previous`: 1/p back to previous, 1 to an out-neighbor of previous, 1/q otherwise.
inline double transition_weight(const DirectedGraph& g, NodeId previous, NodeId next, double p, double q) {
  if (next == previous) return 1.0 / p;
  if (g.has_edge(previous, next)) return 1.0;
  return 1.0 / q;
}

/// One walk from `start`; stops early at a node without out-neighbors.
inline Walk biased_walk(const DirectedGraph& g, NodeId start, std::size_t length, double p, double q, Rng& rng,
                        std::vector<double>& weights) {
  Walk walk;
  walk.reserve(length);
  walk.push_back(start);
  while (walk.size() < length) {
    const NodeId cur = walk.back();
    auto nbrs = g.out_neighbors(cur);
    if (nbrs.empty()) break;
    if (walk.size() == 1) {
      walk.push_back(nbrs[uniform_index(rng, nbrs.size())]);
      continue;
    }
    const NodeId prev = walk[walk.size() - 2];
    weights.resize(nbrs.size());
    double total = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      weights[k] = transition_weight(g, prev, nbrs[k], p, q);
      total += weights[k];
    }
    double x = uniform01(rng) * total;
    std::size_t pick = nbrs.size() - 1;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (x < weights[k]) {
        pick = k;
        break;
      }
      x -= weights[k];
    }
    walk.push_back(nbrs[pick]);
  }
  return walk;
}

/// walks_per_node rounds; each round visits every node once in a freshly shuffled
/// order. The walk in slot (round, position) uses substream (seed, round, start), so
/// the corpus is identical for any worker count.
inline WalkCorpus generate_walks(const DirectedGraph& g, const WalkConfig& cfg, std::uint64_t seed,
                                 unsigned workers = 1) {
  cfg.validate();
  const std::size_t n = g.node_count();
  WalkCorpus corpus(n * cfg.walks_per_node);
  std::vector<NodeId> order(n);
  for (std::size_t round = 0; round < cfg.walks_per_node; ++round) {
    std::iota(order.begin(), order.end(), NodeId{0});
    Rng order_rng = make_rng(seed, 0x5eed, round);
    shuffle(std::span<NodeId>(order), order_rng);
    const std::size_t chunks = workers <= 1 ? 1 : std::size_t{workers} * 4;
    parallel_chunks(n, chunks, workers, [&](std::size_t begin, std::size_t end) {
      std::vector<double> weights;
      for (std::size_t i = begin; i < end; ++i) {
        Rng rng = make_rng(seed, round, order[i]);
        corpus[round * n + i] =
            biased_walk(g, order[i], cfg.walk_length, cfg.return_param, cfg.inout_param, rng, weights);
      }
    });
  }
  return corpus;
}

}  // namespace reachcast
