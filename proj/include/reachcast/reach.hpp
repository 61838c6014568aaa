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

// Reach probability matrices: estimation from cascades, exact enumeration on tiny
// graphs, mean absolute error and the reach text format.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "reachcast/error.hpp"
#include "reachcast/graph.hpp"
#include "reachcast/icm.hpp"
#include "reachcast/parallel.hpp"
#include "reachcast/text.hpp"

namespace reachcast {

struct ReachEntry {
  NodeId dst;
  double probability;

  friend bool operator==(const ReachEntry&, const ReachEntry&) = default;
};

/// Sparse |V| x |V| matrix of reach probabilities stored by source row. Absent
/// entries are zero. Also carries the number of cascades each row was estimated from.
class ReachMatrix {
 public:
  ReachMatrix() = default;
  explicit ReachMatrix(std::size_t node_count) : rows_(node_count), seed_counts_(node_count, 0) {}

  std::size_t node_count() const noexcept { return rows_.size(); }

  /// Replaces row u. Entries must have distinct in-range destinations and
  /// probabilities in [0, 1]; zeros are dropped.
  void set_row(NodeId u, std::vector<ReachEntry> entries) {
    check(u);
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.dst < b.dst; });
    std::erase_if(entries, [](const ReachEntry& e) { return e.probability == 0.0; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].dst >= node_count()) throw IndexError("reach entry destination out of range");
      if (!(entries[i].probability >= 0.0 && entries[i].probability <= 1.0))
        throw ParameterError("reach probability outside [0, 1]");
      if (i > 0 && entries[i].dst == entries[i - 1].dst) throw ParameterError("duplicate reach entry");
    }
    rows_[u] = std::move(entries);
  }

  std::span<const ReachEntry> row(NodeId u) const {
    check(u);
    return rows_[u];
  }

  double at(NodeId u, NodeId v) const {
    auto r = row(u);
    auto it = std::lower_bound(r.begin(), r.end(), v, [](const ReachEntry& e, NodeId d) { return e.dst < d; });
    return it != r.end() && it->dst == v ? it->probability : 0.0;
  }

  std::uint32_t seed_count(NodeId u) const {
    check(u);
    return seed_counts_[u];
  }
  std::span<const std::uint32_t> seed_counts() const noexcept { return seed_counts_; }
  void set_seed_counts(std::vector<std::uint32_t> counts) {
    if (counts.size() != node_count()) throw DimensionError("seed count vector has wrong length");
    seed_counts_ = std::move(counts);
  }

  std::size_t nonzero_count() const noexcept {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
  }

  friend bool operator==(const ReachMatrix&, const ReachMatrix&) = default;

 private:
  void check(NodeId u) const {
    if (u >= node_count()) throw IndexError("reach matrix row out of range");
  }

  std::vector<std::vector<ReachEntry>> rows_;
  std::vector<std::uint32_t> seed_counts_;
};

enum class DivisorMode {
  nominal_r,       // divide counts by the generation-time r (complete cascade sets)
  per_seed_count,  // divide by the number of cascades actually present per seed
};

/// Counts, per seed u and node w, the cascades from u in which w appears, then
/// divides by r_nominal or by the per-seed cascade count. Rows of seeds without
/// cascades are empty.
inline ReachMatrix estimate_reach(const CascadeSet& cs, DivisorMode mode, unsigned workers = 1) {
  const std::size_t n = cs.fingerprint.nodes;
  std::vector<std::uint32_t> counts = cs.per_seed_counts();
  if (mode == DivisorMode::nominal_r) {
    for (std::uint32_t c : counts) {
      if (c > 0 && (cs.r_nominal < 1 || c > static_cast<std::uint32_t>(cs.r_nominal)))
        throw ConsistencyError("a seed has more cascades than r_nominal; use per-seed division");
    }
  }
  // Group cascades by seed without reordering them.
  std::vector<std::size_t> offsets(n + 1, 0);
  for (const auto& c : cs.cascades) ++offsets[c.seed() + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::size_t> by_seed(cs.size());
  {
    auto cursor = offsets;
    for (std::size_t i = 0; i < cs.size(); ++i) by_seed[cursor[cs.cascades[i].seed()]++] = i;
  }

  ReachMatrix out(n);
  std::vector<std::vector<ReachEntry>> rows(n);
  const std::size_t chunks = workers <= 1 ? 1 : std::size_t{workers} * 4;
  parallel_chunks(n, chunks, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> hits(n, 0);
    std::vector<NodeId> touched;
    for (std::size_t u = begin; u < end; ++u) {
      if (counts[u] == 0) continue;
      touched.clear();
      for (std::size_t k = offsets[u]; k < offsets[u + 1]; ++k) {
        for (NodeId w : cs.cascades[by_seed[k]].nodes()) {
          if (hits[w]++ == 0) touched.push_back(w);
        }
      }
      const double divisor = mode == DivisorMode::nominal_r ? cs.r_nominal : counts[u];
      std::sort(touched.begin(), touched.end());
      auto& row = rows[u];
      row.reserve(touched.size());
      for (NodeId w : touched) {
        row.push_back({w, hits[w] / divisor});
        hits[w] = 0;
      }
    }
  });
  for (std::size_t u = 0; u < n; ++u) out.set_row(static_cast<NodeId>(u), std::move(rows[u]));
  out.set_seed_counts(std::move(counts));
  return out;
}

/// Exact reach probabilities from u by live-edge enumeration: each edge is kept
/// independently with its activation probability and v counts when reachable from u
/// in the kept subgraph. Exponential in |E|; refuses graphs with more than 22 edges.
inline std::vector<double> exact_reach_bruteforce(const DirectedGraph& g, const ActivationProbabilities& probs,
                                                  NodeId u) {
  constexpr std::size_t kMaxEdges = 22;
  if (g.edge_count() > kMaxEdges)
    throw ParameterError("exact_reach_bruteforce supports at most 22 edges, got " + std::to_string(g.edge_count()));
  if (!probs.aligned_with(g)) throw DimensionError("activation probabilities not aligned with graph edges");
  if (u >= g.node_count()) throw IndexError("source node out of range");

  const std::size_t n = g.node_count();
  const std::size_t m = g.edge_count();
  std::vector<double> reach(n, 0.0);
  std::vector<std::uint8_t> visited(n);
  std::vector<NodeId> stack;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    double weight = 1.0;
    for (std::size_t e = 0; e < m; ++e) weight *= (mask >> e) & 1 ? probs[e] : 1.0 - probs[e];
    if (weight == 0.0) continue;
    std::fill(visited.begin(), visited.end(), 0);
    visited[u] = 1;
    stack.assign(1, u);
    while (!stack.empty()) {
      const NodeId a = stack.back();
      stack.pop_back();
      auto targets = g.out_neighbors(a);
      auto ids = g.out_edge_ids(a);
      for (std::size_t k = 0; k < targets.size(); ++k) {
        if ((mask >> ids[k]) & 1 && !visited[targets[k]]) {
          visited[targets[k]] = 1;
          stack.push_back(targets[k]);
        }
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (visited[v]) reach[v] += weight;
    }
  }
  reach[u] = 1.0;
  return reach;
}

/// Mean absolute error over all ordered pairs (u, v) with u != v.
inline double mae(const ReachMatrix& predicted, const ReachMatrix& actual) {
  const std::size_t n = actual.node_count();
  if (predicted.node_count() != n) throw DimensionError("mae: node counts differ");
  if (n < 2) return 0.0;
  double total = 0.0;
  for (NodeId u = 0; u < n; ++u) {
    auto a = predicted.row(u);
    auto b = actual.row(u);
    std::size_t i = 0, j = 0;
    double row_sum = 0.0;
    while (i < a.size() || j < b.size()) {
      NodeId v;
      double diff;
      if (j == b.size() || (i < a.size() && a[i].dst < b[j].dst)) {
        v = a[i].dst;
        diff = a[i++].probability;
      } else if (i == a.size() || b[j].dst < a[i].dst) {
        v = b[j].dst;
        diff = b[j++].probability;
      } else {
        v = a[i].dst;
        diff = std::abs(a[i++].probability - b[j++].probability);
      }
      if (v != u) row_sum += diff;
    }
    total += row_sum;
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

// Reach text format:
//   #reachcast-reach v1 nodes=<n> mode=<actual|label|predicted>
//   <src label>\t<dst label>\t<probability, 10 significant digits>
//   #counts
//   <label>\t<cascades from this seed>      (one line per node, index order)

struct LoadedReach {
  ReachMatrix matrix;
  std::vector<std::string> labels;  // index order
  std::string mode;
};

inline void save_reach(std::ostream& out, const ReachMatrix& m, std::span<const std::string> labels,
                       std::string_view mode) {
  if (labels.size() != m.node_count()) throw DimensionError("label count does not match reach matrix");
  out << "#reachcast-reach v1 nodes=" << m.node_count() << " mode=" << mode << '\n';
  for (NodeId u = 0; u < m.node_count(); ++u) {
    for (const auto& e : m.row(u)) out << labels[u] << '\t' << labels[e.dst] << '\t' << text::significant(e.probability, 10) << '\n';
  }
  out << "#counts\n";
  for (NodeId u = 0; u < m.node_count(); ++u) out << labels[u] << '\t' << m.seed_count(u) << '\n';
}

inline LoadedReach load_reach(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !text::starts_with(line, "#reachcast-reach"))
    throw FormatError("missing #reachcast-reach header");
  auto words = text::split_ws(line);
  if (words.size() < 2 || words[1] != "v1") throw FormatError("unsupported reach file version");
  auto n = text::header_int<std::size_t>(line, "nodes");
  auto mode = text::header_field(line, "mode");
  if (!n || !mode) throw FormatError("reach header must carry nodes and mode");

  struct Raw {
    std::string src, dst;
    double p;
  };
  std::vector<Raw> raw;
  LoadedReach out;
  out.mode = std::string(*mode);
  std::vector<std::uint32_t> counts;
  bool in_counts = false;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = text::trim(line);
    if (body.empty()) continue;
    if (body == "#counts") {
      in_counts = true;
      continue;
    }
    if (body.front() == '#') continue;
    auto f = text::split(body, '\t');
    if (in_counts) {
      auto c = f.size() == 2 ? text::parse_int<std::uint32_t>(f[1]) : std::nullopt;
      if (!c) throw ParseError("bad #counts line", lineno);
      out.labels.emplace_back(f[0]);
      counts.push_back(*c);
    } else {
      auto p = f.size() == 3 ? text::parse_double(f[2]) : std::nullopt;
      if (!p) throw ParseError("expected src, dst, probability", lineno);
      raw.push_back({std::string(f[0]), std::string(f[1]), *p});
    }
  }
  if (out.labels.size() != *n) throw FormatError("#counts section must list every node");
  std::unordered_map<std::string, NodeId> index;
  for (NodeId i = 0; i < out.labels.size(); ++i) {
    if (!index.emplace(out.labels[i], i).second) throw FormatError("duplicate label in #counts");
  }
  std::vector<std::vector<ReachEntry>> rows(*n);
  for (const auto& r : raw) {
    auto s = index.find(r.src), d = index.find(r.dst);
    if (s == index.end() || d == index.end()) throw FormatError("entry references unknown label");
    rows[s->second].push_back({d->second, r.p});
  }
  out.matrix = ReachMatrix(*n);
  for (NodeId u = 0; u < *n; ++u) out.matrix.set_row(u, std::move(rows[u]));
  out.matrix.set_seed_counts(std::move(counts));
  return out;
}

/// Reorders a matrix's nodes onto a target label order (same label set required).
inline ReachMatrix align_reach(const ReachMatrix& m, std::span<const std::string> from_labels,
                               std::span<const std::string> to_labels) {
  if (from_labels.size() != to_labels.size() || from_labels.size() != m.node_count())
    throw DimensionError("align_reach: node counts differ");
  std::unordered_map<std::string_view, NodeId> target;
  for (NodeId i = 0; i < to_labels.size(); ++i) target.emplace(to_labels[i], i);
  std::vector<NodeId> map(from_labels.size());
  for (NodeId i = 0; i < from_labels.size(); ++i) {
    auto it = target.find(from_labels[i]);
    if (it == target.end()) throw ConsistencyError("label '" + from_labels[i] + "' missing from target order");
    map[i] = it->second;
  }
  ReachMatrix out(m.node_count());
  std::vector<std::uint32_t> counts(m.node_count());
  for (NodeId u = 0; u < m.node_count(); ++u) {
    std::vector<ReachEntry> row;
    for (const auto& e : m.row(u)) row.push_back({map[e.dst], e.probability});
    out.set_row(map[u], std::move(row));
    counts[map[u]] = m.seed_count(u);
  }
  out.set_seed_counts(std::move(counts));
  return out;
}

}  // namespace reachcast
