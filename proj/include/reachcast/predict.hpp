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

#include <span>
#include <variant>
#include <vector>

#include "reachcast/features.hpp"
#include "reachcast/gbrt.hpp"
#include "reachcast/mlp.hpp"
#include "reachcast/model_io.hpp"
#include "reachcast/parallel.hpp"
#include "reachcast/reach.hpp"

namespace reachcast {

inline double predict(const MlpModel& m, std::span<const double> x) { return m.predict(x); }
inline double predict(const GbrtModel& m, std::span<const double> x) { return m.predict(x); }
inline double predict(const Model& m, std::span<const double> x) {
  return std::visit([&](const auto& model) { return model.predict(x); }, m);
}

inline std::size_t input_dim(const Model& m) {
  return std::visit([](const auto& model) { return model.input_dim(); }, m);
}

namespace detail {

// Predictions for dst = each entry of `dsts`, src fixed, written to `out`.
inline void predict_row(const MlpModel& m, const EmbeddingMatrix& emb, NodeId src, std::span<const NodeId> dsts,
                        std::vector<double>& out) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(2 * emb.dims()), static_cast<Eigen::Index>(dsts.size()));
  for (std::size_t c = 0; c < dsts.size(); ++c)
    link_embedding_into(emb, src, dsts[c], std::span<double>(x.col(static_cast<Eigen::Index>(c)).data(), 2 * emb.dims()));
  Eigen::RowVectorXd p = m.predict_batch(std::move(x));
  out.assign(p.data(), p.data() + p.size());
}

inline void predict_row(const GbrtModel& m, const EmbeddingMatrix& emb, NodeId src, std::span<const NodeId> dsts,
                        std::vector<double>& out) {
  std::vector<double> x(2 * emb.dims());
  out.resize(dsts.size());
  for (std::size_t c = 0; c < dsts.size(); ++c) {
    link_embedding_into(emb, src, dsts[c], x);
    out[c] = m.predict(x);
  }
}

}  // namespace detail

/// Predicted reach for every ordered pair (u, v), u != v, as a ReachMatrix. Rows are
/// independent, so the result does not depend on `workers`.
template <class M>
ReachMatrix predict_reach(const M& model, const EmbeddingMatrix& emb, unsigned workers = 1) {
  if (model.input_dim() != 2 * emb.dims()) throw DimensionError("model input dimension does not match embeddings");
  const std::size_t n = emb.rows();
  std::vector<std::vector<ReachEntry>> rows(n);
  parallel_for(n, workers, [&](std::size_t u) {
    std::vector<NodeId> dsts;
    dsts.reserve(n);
    for (NodeId v = 0; v < n; ++v) {
      if (v != u) dsts.push_back(v);
    }
    std::vector<double> p;
    detail::predict_row(model, emb, static_cast<NodeId>(u), dsts, p);
    for (std::size_t k = 0; k < dsts.size(); ++k) {
      if (p[k] > 0.0) rows[u].push_back({dsts[k], p[k]});
    }
  });
  ReachMatrix out(n);
  for (NodeId u = 0; u < n; ++u) out.set_row(u, std::move(rows[u]));
  return out;
}

inline ReachMatrix predict_reach(const Model& model, const EmbeddingMatrix& emb, unsigned workers = 1) {
  return std::visit([&](const auto& m) { return predict_reach(m, emb, workers); }, model);
}

/// Predictions for an explicit list of ordered pairs.
inline std::vector<double> predict_pairs(const Model& model, const EmbeddingMatrix& emb, std::span<const Edge> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  std::vector<double> x(2 * emb.dims());
  for (const Edge& e : pairs) {
    link_embedding_into(emb, e.src, e.dst, x);
    out.push_back(predict(model, x));
  }
  return out;
}

}  // namespace reachcast
