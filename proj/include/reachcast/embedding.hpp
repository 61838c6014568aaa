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

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "reachcast/error.hpp"
#include "reachcast/graph.hpp"
#include "reachcast/text.hpp"

namespace reachcast {

/// Row-major node_count x dimensions matrix of node vectors.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dims, double fill = 0.0)
      : rows_(rows), dims_(dims), data_(rows * dims, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dims() const noexcept { return dims_; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * dims_, dims_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dims_, dims_}; }

  double& operator()(std::size_t i, std::size_t k) { return data_[i * dims_ + k]; }
  double operator()(std::size_t i, std::size_t k) const { return data_[i * dims_ + k]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::uint64_t fingerprint() const {
    text::Fnv1a h;
    h.add(rows_);
    h.add(dims_);
    h.add_bytes(data_.data(), data_.size() * sizeof(double));
    return h.value();
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dims_ = 0;
  std::vector<double> data_;
};

// Embedding text format (word2vec style):
//   <node_count> <dimensions>
//   <label> <f1> ... <fd>        one line per node, 9 significant digits

inline void save_embeddings(std::ostream& out, const EmbeddingMatrix& emb, std::span<const std::string> labels) {
  if (labels.size() != emb.rows()) throw DimensionError("label count does not match embedding rows");
  out << emb.rows() << ' ' << emb.dims() << '\n';
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    out << labels[i];
    for (double v : emb.row(i)) out << ' ' << text::significant(v, 9);
    out << '\n';
  }
}

struct LoadedEmbeddings {
  EmbeddingMatrix matrix;
  std::vector<std::string> labels;
};

inline LoadedEmbeddings load_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("embedding file is empty");
  auto head = text::split_ws(line);
  if (head.size() != 2) throw FormatError("embedding header must be '<node_count> <dimensions>'");
  auto n = text::parse_int<std::size_t>(head[0]);
  auto d = text::parse_int<std::size_t>(head[1]);
  if (!n || !d) throw FormatError("embedding header must be '<node_count> <dimensions>'");
  LoadedEmbeddings out{EmbeddingMatrix(*n, *d), {}};
  out.labels.reserve(*n);
  std::size_t lineno = 1;
  while (out.labels.size() < *n && std::getline(in, line)) {
    ++lineno;
    auto tok = text::split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != *d + 1)
      throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(*d) +
                        " values, found " + std::to_string(tok.size() - 1));
    auto row = out.matrix.row(out.labels.size());
    for (std::size_t k = 0; k < *d; ++k) {
      auto v = text::parse_double(tok[k + 1]);
      if (!v) throw FormatError("line " + std::to_string(lineno) + ": non-numeric embedding value");
      row[k] = *v;
    }
    out.labels.emplace_back(tok[0]);
  }
  if (out.labels.size() != *n) throw FormatError("embedding file truncated: fewer rows than header declares");
  while (std::getline(in, line)) {
    if (!text::trim(line).empty()) throw FormatError("embedding file has more rows than header declares");
  }
  return out;
}

}  // namespace reachcast
