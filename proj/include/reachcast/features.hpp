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

// Link features (source embedding followed by destination embedding) and the
// regression datasets built from them.

#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "reachcast/embedding.hpp"
#include "reachcast/error.hpp"
#include "reachcast/random.hpp"
#include "reachcast/reach.hpp"
#include "reachcast/text.hpp"

namespace reachcast {

inline void check_pair(const EmbeddingMatrix& emb, NodeId src, NodeId dst) {
  if (src >= emb.rows() || dst >= emb.rows()) throw IndexError("link endpoint out of range");
  if (src == dst) throw ParameterError("link embedding requires src != dst");
}

/// Writes [e_src | e_dst] into `out` (length 2 * dims).
inline void link_embedding_into(const EmbeddingMatrix& emb, NodeId src, NodeId dst, std::span<double> out) {
  check_pair(emb, src, dst);
  const std::size_t d = emb.dims();
  if (out.size() != 2 * d) throw DimensionError("link feature buffer has wrong length");
  std::copy_n(emb.row(src).begin(), d, out.begin());
  std::copy_n(emb.row(dst).begin(), d, out.begin() + static_cast<std::ptrdiff_t>(d));
}

inline std::vector<double> link_embedding(const EmbeddingMatrix& emb, NodeId src, NodeId dst) {
  std::vector<double> out(2 * emb.dims());
  link_embedding_into(emb, src, dst, out);
  return out;
}

struct LinkRow {
  NodeId src;
  NodeId dst;
  double label;

  friend bool operator==(const LinkRow&, const LinkRow&) = default;
};

struct DatasetProvenance {
  std::uint64_t embedding_fingerprint = 0;
  std::uint64_t label_fingerprint = 0;
  double zero_keep_fraction = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetProvenance&, const DatasetProvenance&) = default;
};

/// Ordered-pair regression rows over a fixed embedding. Feature vectors are
/// assembled on demand from the embedding rather than stored per row.
class Dataset {
 public:
  Dataset() = default;
  Dataset(EmbeddingMatrix emb, std::vector<LinkRow> rows, DatasetProvenance provenance = {})
      : emb_(std::move(emb)), rows_(std::move(rows)), provenance_(provenance) {
    for (const auto& r : rows_) {
      check_pair(emb_, r.src, r.dst);
      if (!(r.label >= 0.0 && r.label <= 1.0)) throw ParameterError("dataset label outside [0, 1]");
    }
  }

  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  std::size_t feature_dim() const noexcept { return 2 * emb_.dims(); }

  const LinkRow& row(std::size_t i) const { return rows_[i]; }
  std::span<const LinkRow> rows() const noexcept { return rows_; }
  double label(std::size_t i) const { return rows_[i].label; }

  void features(std::size_t i, std::span<double> out) const { link_embedding_into(emb_, rows_[i].src, rows_[i].dst, out); }

  /// Feature f of row i without materializing the vector.
  double feature(std::size_t i, std::size_t f) const {
    const std::size_t d = emb_.dims();
    return f < d ? emb_(rows_[i].src, f) : emb_(rows_[i].dst, f - d);
  }

  const EmbeddingMatrix& embeddings() const noexcept { return emb_; }
  const DatasetProvenance& provenance() const noexcept { return provenance_; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  EmbeddingMatrix emb_;
  std::vector<LinkRow> rows_;
  DatasetProvenance provenance_;
};

inline std::uint64_t fingerprint(const ReachMatrix& m) {
  text::Fnv1a h;
  h.add(m.node_count());
  for (NodeId u = 0; u < m.node_count(); ++u) {
    for (const auto& e : m.row(u)) {
      h.add(u);
      h.add(e.dst);
      h.add(e.probability);
    }
  }
  return h.value();
}

/// One row per ordered pair (u, v), u != v, in (u asc, v asc) order, labelled with
/// labels(u, v). Zero-label rows survive independently with probability
/// zero_keep_fraction; the keep decision for pair (u, v) uses its own substream.
inline Dataset build_dataset(const EmbeddingMatrix& emb, const ReachMatrix& labels, double zero_keep_fraction,
                             std::uint64_t seed) {
  if (emb.rows() != labels.node_count()) throw DimensionError("embedding rows and label matrix node count differ");
  if (!(zero_keep_fraction > 0.0 && zero_keep_fraction <= 1.0))
    throw ParameterError("zero_keep_fraction must lie in (0, 1]");
  const std::size_t n = emb.rows();
  std::vector<LinkRow> rows;
  rows.reserve(zero_keep_fraction == 1.0 ? n * (n ? n - 1 : 0) : 0);
  for (NodeId u = 0; u < n; ++u) {
    auto row = labels.row(u);
    std::size_t k = 0;
    Rng rng = make_rng(seed, u);
    for (NodeId v = 0; v < n; ++v) {
      while (k < row.size() && row[k].dst < v) ++k;
      const double y = k < row.size() && row[k].dst == v ? row[k].probability : 0.0;
      if (v == u) continue;
      if (y == 0.0 && zero_keep_fraction < 1.0 && !(uniform01(rng) < zero_keep_fraction)) continue;
      rows.push_back({u, v, y});
    }
  }
  return Dataset(emb, std::move(rows), {emb.fingerprint(), fingerprint(labels), zero_keep_fraction, seed});
}

// Dataset text format:
//   #reachcast-dataset v1 dim=<2d> rows=<n>
//   <src label>\t<dst label>\t<label>\t<f1>,...,<f2d>

inline void save_dataset(std::ostream& out, const Dataset& ds, std::span<const std::string> labels) {
  if (labels.size() != ds.embeddings().rows()) throw DimensionError("label count does not match embedding rows");
  out << "#reachcast-dataset v1 dim=" << ds.feature_dim() << " rows=" << ds.size() << '\n';
  std::vector<double> x(ds.feature_dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds.row(i);
    ds.features(i, x);
    out << labels[r.src] << '\t' << labels[r.dst] << '\t' << text::exact(r.label) << '\t';
    for (std::size_t f = 0; f < x.size(); ++f) {
      if (f) out << ',';
      out << text::exact(x[f]);
    }
    out << '\n';
  }
}

struct LoadedDataset {
  Dataset dataset;
  std::vector<std::string> labels;
};

/// Reads a materialized dataset. The per-node embedding is recovered from the
/// feature columns, so every row must agree on the vector of each node it mentions.
/// Nodes that never appear get a zero vector.
inline LoadedDataset load_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !text::starts_with(line, "#reachcast-dataset"))
    throw FormatError("missing #reachcast-dataset header");
  auto words = text::split_ws(line);
  if (words.size() < 2 || words[1] != "v1") throw FormatError("unsupported dataset version");
  auto dim = text::header_int<std::size_t>(line, "dim");
  auto nrows = text::header_int<std::size_t>(line, "rows");
  if (!dim || !nrows || *dim % 2 != 0) throw FormatError("dataset header must carry an even dim and rows");
  const std::size_t d = *dim / 2;

  LoadedDataset out;
  std::unordered_map<std::string, NodeId> index;
  std::vector<std::vector<double>> vectors;
  std::vector<LinkRow> rows;
  rows.reserve(*nrows);
  auto intern = [&](std::string_view label, std::span<const double> v, std::size_t lineno) {
    auto [it, inserted] = index.emplace(std::string(label), static_cast<NodeId>(out.labels.size()));
    if (inserted) {
      out.labels.emplace_back(label);
      vectors.emplace_back(v.begin(), v.end());
    } else if (!std::equal(v.begin(), v.end(), vectors[it->second].begin())) {
      throw ParseError("inconsistent feature vector for node '" + std::string(label) + "'", lineno);
    }
    return it->second;
  };
  std::vector<double> x(*dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto f = text::split(body, '\t');
    if (f.size() != 4) throw ParseError("expected src, dst, label, features", lineno);
    auto y = text::parse_double(f[2]);
    auto cols = text::split(f[3], ',');
    if (!y || cols.size() != *dim) throw ParseError("bad label or feature count", lineno);
    for (std::size_t k = 0; k < *dim; ++k) {
      auto v = text::parse_double(cols[k]);
      if (!v) throw ParseError("non-numeric feature", lineno);
      x[k] = *v;
    }
    const NodeId s = intern(f[0], std::span<const double>(x).first(d), lineno);
    const NodeId t = intern(f[1], std::span<const double>(x).subspan(d), lineno);
    rows.push_back({s, t, *y});
  }
  if (rows.size() != *nrows) throw FormatError("dataset row count does not match header");
  EmbeddingMatrix emb(out.labels.size(), d);
  for (std::size_t i = 0; i < vectors.size(); ++i) std::copy(vectors[i].begin(), vectors[i].end(), emb.row(i).begin());
  out.dataset = Dataset(std::move(emb), std::move(rows));
  return out;
}

}  // namespace reachcast
