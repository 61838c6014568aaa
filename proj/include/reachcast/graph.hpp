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

#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "reachcast/error.hpp"
#include "reachcast/text.hpp"

namespace reachcast {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Edge {
  NodeId src;
  NodeId dst;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Node and edge counts; used to check that artifacts belong to the same graph.
struct GraphFingerprint {
  std::size_t nodes = 0;
  std::size_t edges = 0;

  friend bool operator==(const GraphFingerprint&, const GraphFingerprint&) = default;
};

/// Immutable directed graph over dense node indices [0, node_count).
///
/// Edges keep their ingestion order (edge ids index that order); adjacency lists are
/// stored in CSR form sorted by neighbor index, each out-neighbor paired with the id
/// of the edge that reaches it. Self-loops and duplicate edges never survive
/// construction.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  /// Builds a graph from labelled nodes and an edge list. Self-loops and repeated
  /// edges are dropped (first occurrence wins). Labels must be unique.
  static DirectedGraph from_edges(std::vector<std::string> labels, std::span<const Edge> edges) {
    DirectedGraph g;
    g.labels_ = std::move(labels);
    g.index_.reserve(g.labels_.size());
    for (NodeId i = 0; i < g.labels_.size(); ++i) {
      if (!g.index_.emplace(g.labels_[i], i).second)
        throw ParameterError("duplicate node label '" + g.labels_[i] + "'");
    }
    const auto n = g.labels_.size();
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(edges.size());
    for (const Edge& e : edges) {
      if (e.src >= n || e.dst >= n) throw IndexError("edge endpoint out of range");
      if (e.src == e.dst) continue;
      if (!seen.insert(key(e.src, e.dst)).second) continue;
      g.edges_.push_back(e);
    }
    g.build_adjacency();
    return g;
  }

  /// Graph whose labels are the decimal node indices.
  static DirectedGraph from_edges(std::size_t node_count, std::span<const Edge> edges) {
    std::vector<std::string> labels(node_count);
    for (std::size_t i = 0; i < node_count; ++i) labels[i] = std::to_string(i);
    return from_edges(std::move(labels), edges);
  }

  std::size_t node_count() const noexcept { return labels_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  GraphFingerprint fingerprint() const noexcept { return {node_count(), edge_count()}; }

  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId id) const { return edges_.at(id); }

  /// Out-neighbors of u, ascending.
  std::span<const NodeId> out_neighbors(NodeId u) const {
    check(u);
    return {out_targets_.data() + out_offsets_[u], out_targets_.data() + out_offsets_[u + 1]};
  }

  /// Edge ids parallel to out_neighbors(u).
  std::span<const EdgeId> out_edge_ids(NodeId u) const {
    check(u);
    return {out_edges_.data() + out_offsets_[u], out_edges_.data() + out_offsets_[u + 1]};
  }

  /// In-neighbors of v, ascending.
  std::span<const NodeId> in_neighbors(NodeId v) const {
    check(v);
    return {in_sources_.data() + in_offsets_[v], in_sources_.data() + in_offsets_[v + 1]};
  }

  std::size_t out_degree(NodeId u) const { return out_neighbors(u).size(); }
  std::size_t in_degree(NodeId v) const { return in_neighbors(v).size(); }

  bool has_edge(NodeId u, NodeId v) const {
    auto nbrs = out_neighbors(u);
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
  }

  const std::string& label(NodeId u) const {
    check(u);
    return labels_[u];
  }
  std::span<const std::string> labels() const noexcept { return labels_; }

  std::optional<NodeId> find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  static std::uint64_t key(NodeId a, NodeId b) { return (std::uint64_t{a} << 32) | b; }

  void check(NodeId u) const {
    if (u >= node_count())
      throw IndexError("node index " + std::to_string(u) + " out of range [0, " + std::to_string(node_count()) + ")");
  }

  void build_adjacency() {
    const auto n = node_count();
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (const Edge& e : edges_) {
      ++out_offsets_[e.src + 1];
      ++in_offsets_[e.dst + 1];
    }
    std::partial_sum(out_offsets_.begin(), out_offsets_.end(), out_offsets_.begin());
    std::partial_sum(in_offsets_.begin(), in_offsets_.end(), in_offsets_.begin());

    std::vector<EdgeId> order(edges_.size());
    std::iota(order.begin(), order.end(), EdgeId{0});
    std::sort(order.begin(), order.end(), [&](EdgeId a, EdgeId b) {
      return key(edges_[a].src, edges_[a].dst) < key(edges_[b].src, edges_[b].dst);
    });
    out_targets_.resize(edges_.size());
    out_edges_.resize(edges_.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      out_targets_[i] = edges_[order[i]].dst;
      out_edges_[i] = order[i];
    }

    std::sort(order.begin(), order.end(), [&](EdgeId a, EdgeId b) {
      return key(edges_[a].dst, edges_[a].src) < key(edges_[b].dst, edges_[b].src);
    });
    in_sources_.resize(edges_.size());
    for (std::size_t i = 0; i < order.size(); ++i) in_sources_[i] = edges_[order[i]].src;
  }

  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<NodeId> out_targets_;
  std::vector<EdgeId> out_edges_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<NodeId> in_sources_;
};

enum class DelimiterMode { automatic, whitespace, comma };

/// Line accounting reported by load_edge_list.
struct EdgeListStats {
  std::size_t lines = 0;
  std::size_t comments = 0;  // includes blank lines
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
};

/// Reads a whitespace- or comma-delimited edge list. Only the first two columns are
/// used; `#` and `%` start comment lines. Node indices follow first appearance.
inline DirectedGraph load_edge_list(std::istream& in, DelimiterMode mode = DelimiterMode::automatic,
                                    EdgeListStats* stats = nullptr) {
  EdgeListStats local;
  std::vector<std::string> labels;
  std::unordered_map<std::string, NodeId> index;
  std::vector<Edge> edges;
  std::unordered_set<std::uint64_t> seen;

  auto intern = [&](std::string_view label) {
    auto [it, inserted] = index.emplace(std::string(label), static_cast<NodeId>(labels.size()));
    if (inserted) labels.emplace_back(label);
    return it->second;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++local.lines;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#' || body.front() == '%') {
      ++local.comments;
      continue;
    }
    const bool comma = mode == DelimiterMode::comma ||
                       (mode == DelimiterMode::automatic && body.find(',') != std::string_view::npos);
    std::vector<std::string_view> tokens;
    if (comma) {
      for (auto t : text::split(body, ',')) tokens.push_back(text::trim(t));
    } else {
      tokens = text::split_ws(body);
    }
    if (tokens.size() < 2 || tokens[0].empty() || tokens[1].empty())
      throw ParseError("expected at least two columns (source, target)", local.lines);
    const NodeId src = intern(tokens[0]);
    const NodeId dst = intern(tokens[1]);
    if (src == dst) {
      ++local.self_loops;
      continue;
    }
    if (!seen.insert((std::uint64_t{src} << 32) | dst).second) {
      ++local.duplicates;
      continue;
    }
    edges.push_back({src, dst});
  }
  if (stats) *stats = local;
  return DirectedGraph::from_edges(std::move(labels), edges);
}

/// Writes `src dst` lines in edge-id order, which reloads to the same indexing.
inline void save_edge_list(std::ostream& out, const DirectedGraph& g) {
  for (const Edge& e : g.edges()) out << g.label(e.src) << ' ' << g.label(e.dst) << '\n';
}

/// Subgraph induced by `nodes` (in the given order, which becomes the new indexing).
inline DirectedGraph induced_subgraph(const DirectedGraph& g, std::span<const NodeId> nodes) {
  std::vector<std::int64_t> remap(g.node_count(), -1);
  std::vector<std::string> labels;
  labels.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (remap.at(nodes[i]) >= 0) throw ParameterError("induced_subgraph: repeated node");
    remap[nodes[i]] = static_cast<std::int64_t>(i);
    labels.push_back(g.label(nodes[i]));
  }
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    if (remap[e.src] >= 0 && remap[e.dst] >= 0)
      edges.push_back({static_cast<NodeId>(remap[e.src]), static_cast<NodeId>(remap[e.dst])});
  }
  return DirectedGraph::from_edges(std::move(labels), edges);
}

}  // namespace reachcast
