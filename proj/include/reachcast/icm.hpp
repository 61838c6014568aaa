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

// Independent Cascade Model: activation probabilities, single-cascade simulation,
// cascade-set generation and sampling, and the cascade text format.

#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "reachcast/error.hpp"
#include "reachcast/graph.hpp"
#include "reachcast/parallel.hpp"
#include "reachcast/random.hpp"
#include "reachcast/text.hpp"

namespace reachcast {

/// Per-edge activation probabilities, indexed by edge id.
class ActivationProbabilities {
 public:
  ActivationProbabilities() = default;

  /// Wraps explicit values; every value must lie in [0, max_p] and max_p in [0, 1].
  ActivationProbabilities(std::vector<double> values, double max_p) : values_(std::move(values)), max_p_(max_p) {
    if (!(max_p >= 0.0 && max_p <= 1.0)) throw ParameterError("max_p must lie in [0, 1]");
    for (double p : values_) {
      if (!(p >= 0.0 && p <= max_p)) throw ParameterError("activation probability outside [0, max_p]");
    }
  }

  double operator[](EdgeId e) const { return values_[e]; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double max_p() const noexcept { return max_p_; }

  bool aligned_with(const DirectedGraph& g) const noexcept { return values_.size() == g.edge_count(); }

 private:
  std::vector<double> values_;
  double max_p_ = 0.0;
};

/// Independent U[0, max_p) draw per edge, in edge-id order.
inline ActivationProbabilities assign_probabilities(const DirectedGraph& g, double max_p, std::uint64_t seed) {
  if (!(max_p >= 0.0 && max_p <= 1.0)) throw ParameterError("max_p must lie in [0, 1]");
  Rng rng = make_rng(seed);
  std::vector<double> p(g.edge_count());
  for (double& v : p) v = uniform01(rng) * max_p;
  return ActivationProbabilities(std::move(p), max_p);
}

/// One realized diffusion: step t holds the nodes newly activated at time t.
/// Step 0 holds the seed. Steps are stored flattened; each step is sorted.
class Cascade {
 public:
  Cascade() = default;
  explicit Cascade(NodeId seed) : nodes_{seed}, offsets_{0, 1} {}

  NodeId seed() const { return nodes_.front(); }
  std::size_t step_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }

  std::span<const NodeId> step(std::size_t t) const {
    return {nodes_.data() + offsets_.at(t), nodes_.data() + offsets_.at(t + 1)};
  }

  /// Every activated node, in step order.
  std::span<const NodeId> nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  void append_step(std::span<const NodeId> activated) {
    if (offsets_.empty()) offsets_.push_back(0);
    nodes_.insert(nodes_.end(), activated.begin(), activated.end());
    offsets_.push_back(static_cast<std::uint32_t>(nodes_.size()));
  }

  friend bool operator==(const Cascade&, const Cascade&) = default;

 private:
  std::vector<NodeId> nodes_;
  std::vector<std::uint32_t> offsets_;
};

/// Throws ConsistencyError unless `c` is a valid progressive cascade on `g`:
/// a single seed at t = 0, disjoint steps, no empty steps, and every node at
/// t + 1 having an in-neighbor activated at t.
inline void validate_cascade(const Cascade& c, const DirectedGraph& g) {
  if (c.step_count() == 0) throw ConsistencyError("cascade has no steps");
  if (c.step(0).size() != 1) throw ConsistencyError("step 0 must hold exactly the seed");
  std::vector<std::uint8_t> seen(g.node_count(), 0);
  for (std::size_t t = 0; t < c.step_count(); ++t) {
    auto step = c.step(t);
    if (step.empty()) throw ConsistencyError("empty step " + std::to_string(t));
    for (NodeId v : step) {
      if (v >= g.node_count()) throw ConsistencyError("node index out of range in cascade");
      if (seen[v]) throw ConsistencyError("node " + g.label(v) + " activated twice");
      if (t > 0) {
        auto prev = c.step(t - 1);
        auto parents = g.in_neighbors(v);
        const bool has_parent = std::any_of(parents.begin(), parents.end(), [&](NodeId u) {
          return std::find(prev.begin(), prev.end(), u) != prev.end();
        });
        if (!has_parent)
          throw ConsistencyError("node " + g.label(v) + " at step " + std::to_string(t) +
                                 " has no in-neighbor active at the previous step");
      }
    }
    for (NodeId v : step) seen[v] = 1;
  }
}

/// Source of attempt outcomes: returns a uniform [0, 1) value for an attempt along
/// the given edge; the attempt succeeds iff the value is below the edge probability.
template <class F>
concept AttemptDraw = std::invocable<F&, EdgeId> && std::convertible_to<std::invoke_result_t<F&, EdgeId>, double>;

/// Reusable simulation state; one per worker avoids a per-cascade allocation of
/// the activation markers.
class IcmSimulator {
 public:
  explicit IcmSimulator(const DirectedGraph& g, const ActivationProbabilities& probs) : g_(&g), probs_(&probs) {
    if (!probs.aligned_with(g)) throw DimensionError("activation probabilities not aligned with graph edges");
    stamp_.assign(g.node_count(), 0);
  }

  /// Simulates one cascade from `seed`. Activators are processed in ascending index
  /// order and each tries its still-inactive out-neighbors in ascending order; a node
  /// already activated in the current step is not attempted again.
  template <AttemptDraw Draw>
  Cascade run(NodeId seed, Draw&& draw) {
    if (seed >= g_->node_count()) throw IndexError("seed node out of range");
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
    Cascade cascade(seed);
    stamp_[seed] = epoch_;
    frontier_.assign(1, seed);
    while (true) {
      next_.clear();
      for (NodeId u : frontier_) {
        auto targets = g_->out_neighbors(u);
        auto ids = g_->out_edge_ids(u);
        for (std::size_t k = 0; k < targets.size(); ++k) {
          const NodeId v = targets[k];
          if (stamp_[v] == epoch_) continue;
          if (static_cast<double>(draw(ids[k])) < (*probs_)[ids[k]]) {
            stamp_[v] = epoch_;
            next_.push_back(v);
          }
        }
      }
      if (next_.empty()) break;
      std::sort(next_.begin(), next_.end());
      cascade.append_step(next_);
      frontier_.swap(next_);
    }
    return cascade;
  }

  Cascade run(NodeId seed, Rng& rng) {
    return run(seed, [&rng](EdgeId) { return uniform01(rng); });
  }

 private:
  const DirectedGraph* g_;
  const ActivationProbabilities* probs_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<NodeId> frontier_;
  std::vector<NodeId> next_;
};

template <AttemptDraw Draw>
Cascade run_icm(const DirectedGraph& g, const ActivationProbabilities& probs, NodeId seed, Draw&& draw) {
  IcmSimulator sim(g, probs);
  return sim.run(seed, std::forward<Draw>(draw));
}

inline Cascade run_icm(const DirectedGraph& g, const ActivationProbabilities& probs, NodeId seed, Rng& rng) {
  IcmSimulator sim(g, probs);
  return sim.run(seed, rng);
}

struct CascadeSet {
  std::vector<Cascade> cascades;
  /// Cascades initiated per seed node when the full set was generated.
  int r_nominal = 0;
  GraphFingerprint fingerprint;

  std::size_t size() const noexcept { return cascades.size(); }
  bool empty() const noexcept { return cascades.empty(); }

  /// Number of cascades started from each node.
  std::vector<std::uint32_t> per_seed_counts() const {
    std::vector<std::uint32_t> counts(fingerprint.nodes, 0);
    for (const auto& c : cascades) {
      if (c.seed() >= counts.size()) throw ConsistencyError("cascade seed outside graph fingerprint");
      ++counts[c.seed()];
    }
    return counts;
  }

  friend bool operator==(const CascadeSet&, const CascadeSet&) = default;
};

/// r cascades per node, ordered by (seed asc, replicate asc). Replicate j of seed v
/// draws from the substream derive_seed(seed, v, j), so the result does not depend
/// on `workers`.
inline CascadeSet generate_cascade_set(const DirectedGraph& g, const ActivationProbabilities& probs, int r,
                                       std::uint64_t seed, unsigned workers = 1) {
  if (r < 1) throw ParameterError("r must be at least 1");
  if (!probs.aligned_with(g)) throw DimensionError("activation probabilities not aligned with graph edges");
  CascadeSet out;
  out.r_nominal = r;
  out.fingerprint = g.fingerprint();
  const std::size_t n = g.node_count();
  out.cascades.resize(n * static_cast<std::size_t>(r));
  const std::size_t chunks = workers <= 1 ? 1 : std::size_t{workers} * 4;
  parallel_chunks(n, chunks, workers, [&](std::size_t begin, std::size_t end) {
    IcmSimulator sim(g, probs);
    for (std::size_t v = begin; v < end; ++v) {
      for (int j = 0; j < r; ++j) {
        Rng rng = make_rng(seed, v, j);
        out.cascades[v * r + j] = sim.run(static_cast<NodeId>(v), rng);
      }
    }
  });
  return out;
}

/// Positions (ascending) of a uniformly random k-subset of [0, n).
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  // Partial Fisher-Yates: the first k slots end up a uniform sample.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  return perm;
}

inline std::size_t portion_size(std::size_t n, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ParameterError("fraction must lie in [0, 1]");
  auto k = static_cast<std::size_t>(fraction * static_cast<double>(n));
  return std::min(k, n);
}

inline CascadeSet subset(const CascadeSet& cs, std::span<const std::size_t> positions) {
  CascadeSet out;
  out.r_nominal = cs.r_nominal;
  out.fingerprint = cs.fingerprint;
  out.cascades.reserve(positions.size());
  for (std::size_t i : positions) out.cascades.push_back(cs.cascades.at(i));
  return out;
}

/// Uniform sample without replacement of floor(fraction * |cs|) cascades, kept in
/// their original relative order.
inline CascadeSet sample_portion(const CascadeSet& cs, double fraction, std::uint64_t seed) {
  const std::size_t k = portion_size(cs.size(), fraction);
  return subset(cs, sample_indices(cs.size(), k, seed));
}

/// Nested samples: one random permutation, each fraction takes a prefix of it, so a
/// larger fraction always contains every cascade of a smaller one.
inline std::vector<CascadeSet> sample_nested_portions(const CascadeSet& cs, std::span<const double> fractions,
                                                      std::uint64_t seed) {
  std::vector<std::size_t> perm(cs.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  shuffle(std::span<std::size_t>(perm), rng);
  std::vector<CascadeSet> out;
  for (double f : fractions) {
    std::vector<std::size_t> prefix(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(portion_size(cs.size(), f)));
    std::sort(prefix.begin(), prefix.end());
    out.push_back(subset(cs, prefix));
  }
  return out;
}

// Cascade text format:
//   #reachcast-cascades v1 r=<r> nodes=<n> edges=<m>
//   <id>\t<seed label>\t0:<label>\t1:<label>,<label>...

inline void save_cascades(std::ostream& out, const CascadeSet& cs, std::span<const std::string> labels) {
  if (labels.size() != cs.fingerprint.nodes) throw DimensionError("label count does not match cascade set");
  out << "#reachcast-cascades v1 r=" << cs.r_nominal << " nodes=" << cs.fingerprint.nodes
      << " edges=" << cs.fingerprint.edges << '\n';
  for (std::size_t i = 0; i < cs.cascades.size(); ++i) {
    const Cascade& c = cs.cascades[i];
    out << i << '\t' << labels[c.seed()];
    for (std::size_t t = 0; t < c.step_count(); ++t) {
      out << '\t' << t << ':';
      bool first = true;
      for (NodeId v : c.step(t)) {
        if (!first) out << ',';
        out << labels[v];
        first = false;
      }
    }
    out << '\n';
  }
}

/// Reads the cascade format, resolving labels against `g` and validating every
/// cascade against it.
inline CascadeSet load_cascades(std::istream& in, const DirectedGraph& g) {
  std::string line;
  if (!std::getline(in, line) || !text::starts_with(line, "#reachcast-cascades"))
    throw FormatError("missing #reachcast-cascades header");
  if (text::split_ws(line).size() < 2 || text::split_ws(line)[1] != "v1") throw FormatError("unsupported cascade file version");
  auto r = text::header_int<int>(line, "r");
  auto n = text::header_int<std::size_t>(line, "nodes");
  auto m = text::header_int<std::size_t>(line, "edges");
  if (!r || !n || !m) throw FormatError("cascade header must carry r, nodes and edges");
  CascadeSet cs;
  cs.r_nominal = *r;
  cs.fingerprint = {*n, *m};
  if (!(cs.fingerprint == g.fingerprint()))
    throw ConsistencyError("cascade file was generated on a different graph (node/edge counts differ)");

  auto resolve = [&](std::string_view label, std::size_t lineno) {
    auto id = g.find(label);
    if (!id) throw ParseError("unknown node label '" + std::string(label) + "'", lineno);
    return *id;
  };

  std::size_t lineno = 1;
  std::vector<NodeId> step;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto fields = text::split(body, '\t');
    if (fields.size() < 3) throw ParseError("cascade line needs id, seed and at least one step", lineno);
    const NodeId seed = resolve(fields[1], lineno);
    Cascade c;
    for (std::size_t f = 2; f < fields.size(); ++f) {
      auto colon = fields[f].find(':');
      if (colon == std::string_view::npos) throw ParseError("step field missing ':'", lineno);
      auto t = text::parse_int<std::size_t>(fields[f].substr(0, colon));
      if (!t || *t != f - 2) throw ParseError("steps must be numbered consecutively from 0", lineno);
      step.clear();
      auto members = fields[f].substr(colon + 1);
      if (!members.empty()) {
        for (auto lab : text::split(members, ',')) step.push_back(resolve(lab, lineno));
      }
      std::sort(step.begin(), step.end());
      c.append_step(step);
    }
    if (c.step(0).size() != 1 || c.seed() != seed) throw ParseError("step 0 must contain exactly the seed", lineno);
    try {
      validate_cascade(c, g);
    } catch (const ConsistencyError& e) {
      throw ParseError(e.what(), lineno);
    }
    cs.cascades.push_back(std::move(c));
  }
  return cs;
}

}  // namespace reachcast
