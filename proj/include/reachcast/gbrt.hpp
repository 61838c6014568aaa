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

// Least-squares gradient boosting over depth-limited regression trees.
//
// Split search is restricted to per-feature candidate thresholds placed at quantiles
// of the training values; rows are pre-binned against those thresholds so each tree
// level costs one histogram pass over (rows x features).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "reachcast/error.hpp"
#include "reachcast/features.hpp"
#include "reachcast/parallel.hpp"
#include "reachcast/random.hpp"

namespace reachcast {

struct GbrtConfig {
  std::size_t trees = 100;
  std::size_t max_depth = 3;
  double shrinkage = 0.1;
  double subsample = 1.0;
  std::size_t candidate_thresholds = 32;
  // Rows drawn (without replacement) to place the quantile thresholds.
  std::size_t quantile_sample = 50000;
  unsigned workers = 1;

  void validate() const {
    if (max_depth < 1) throw ParameterError("GBRT max depth must be at least 1");
    if (!(shrinkage > 0.0)) throw ParameterError("GBRT shrinkage must be positive");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ParameterError("GBRT subsample must lie in (0, 1]");
    if (candidate_thresholds < 1 || candidate_thresholds > 255)
      throw ParameterError("GBRT candidate thresholds must lie in [1, 255]");
  }
};

/// Internal nodes send x[feature] < threshold left.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const {
    std::int32_t i = 0;
    while (!nodes_[i].is_leaf()) i = x[nodes_[i].feature] < nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return nodes_[i].value;
  }

  std::size_t depth() const { return depth_from(0); }
  std::span<const TreeNode> nodes() const noexcept { return nodes_; }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::size_t depth_from(std::int32_t i) const {
    if (nodes_.empty() || nodes_[i].is_leaf()) return 0;
    return 1 + std::max(depth_from(nodes_[i].left), depth_from(nodes_[i].right));
  }

  std::vector<TreeNode> nodes_;
};

class GbrtModel {
 public:
  GbrtModel() = default;
  GbrtModel(std::size_t input_dim, double initial, double shrinkage, std::vector<RegressionTree> trees = {})
      : input_dim_(input_dim), initial_(initial), shrinkage_(shrinkage), trees_(std::move(trees)) {
    for (const auto& t : trees_) {
      for (const auto& n : t.nodes()) {
        if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= input_dim_)
          throw DimensionError("tree split feature outside input dimension");
      }
    }
  }

  std::size_t input_dim() const noexcept { return input_dim_; }
  double initial() const noexcept { return initial_; }
  double shrinkage() const noexcept { return shrinkage_; }
  std::span<const RegressionTree> trees() const noexcept { return trees_; }

  /// Unclipped ensemble output.
  double raw(std::span<const double> x) const {
    double f = initial_;
    for (const auto& t : trees_) f += shrinkage_ * t.predict(x);
    return f;
  }

  double predict(std::span<const double> x) const {
    if (x.size() != input_dim_) throw DimensionError("GBRT input dimension mismatch");
    return std::clamp(raw(x), 0.0, 1.0);
  }

  friend bool operator==(const GbrtModel&, const GbrtModel&) = default;

 private:
  std::size_t input_dim_ = 0;
  double initial_ = 0.0;
  double shrinkage_ = 0.1;
  std::vector<RegressionTree> trees_;
};

struct GbrtTrainResult {
  GbrtModel model;
  /// Training mean squared error after initialization (index 0) and after each tree.
  std::vector<double> stage_losses;
};

namespace detail {

/// Sorted distinct candidate thresholds for one feature from sampled values.
inline std::vector<double> quantile_thresholds(std::vector<double> values, std::size_t count) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  if (values.empty()) return out;
  for (std::size_t k = 1; k <= count; ++k) {
    const auto pos = static_cast<std::size_t>(static_cast<double>(k) * static_cast<double>(values.size()) /
                                              static_cast<double>(count + 1));
    const double t = values[std::min(pos, values.size() - 1)];
    // A threshold at the minimum would leave the left side empty.
    if (t > values.front() && (out.empty() || t > out.back())) out.push_back(t);
  }
  return out;
}

struct SplitChoice {
  double gain = 0.0;
  std::int32_t feature = -1;
  std::int32_t bin = -1;  // rows with bin <= this go left
};

}  // namespace detail

inline GbrtTrainResult train_gbrt(const Dataset& ds, const GbrtConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (ds.empty()) throw TrainingError("cannot train GBRT on an empty dataset");
  const std::size_t n = ds.size();
  const std::size_t dim = ds.feature_dim();

  // Quantile thresholds and bins, per feature.
  std::vector<std::size_t> sample_rows = sample_indices(n, std::min(n, cfg.quantile_sample), derive_seed(seed, 0x9a));
  std::vector<std::vector<double>> thresholds(dim);
  std::vector<std::uint8_t> bins(n * dim);
  parallel_for(dim, cfg.workers, [&](std::size_t f) {
    std::vector<double> vals;
    vals.reserve(sample_rows.size());
    for (std::size_t i : sample_rows) vals.push_back(ds.feature(i, f));
    thresholds[f] = detail::quantile_thresholds(std::move(vals), cfg.candidate_thresholds);
    const auto& th = thresholds[f];
    std::uint8_t* col = bins.data() + f * n;
    for (std::size_t i = 0; i < n; ++i)
      col[i] = static_cast<std::uint8_t>(std::upper_bound(th.begin(), th.end(), ds.feature(i, f)) - th.begin());
  });

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += ds.label(i);
  mean /= static_cast<double>(n);

  std::vector<double> pred(n, mean), resid(n);
  auto training_mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (ds.label(i) - pred[i]) * (ds.label(i) - pred[i]);
    return s / static_cast<double>(n);
  };

  GbrtTrainResult result;
  result.stage_losses.push_back(training_mse());
  std::vector<RegressionTree> trees;
  trees.reserve(cfg.trees);

  constexpr std::int32_t kDone = -1;
  std::vector<std::int32_t> slot(n);          // position of the row's node in the current frontier
  std::vector<std::int32_t> leaf_of(n);       // final node index per row (all rows)
  std::vector<std::uint8_t> in_sample(n, 1);

  for (std::size_t t = 0; t < cfg.trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) resid[i] = ds.label(i) - pred[i];
    if (cfg.subsample < 1.0) {
      std::fill(in_sample.begin(), in_sample.end(), 0);
      for (std::size_t i : sample_indices(n, std::max<std::size_t>(1, portion_size(n, cfg.subsample)), derive_seed(seed, 0x5b, t)))
        in_sample[i] = 1;
    }

    std::vector<TreeNode> nodes(1);
    std::vector<std::int32_t> frontier{0};
    std::vector<std::int32_t> split_bin;  // per node, bin index of its threshold
    split_bin.push_back(-1);
    std::fill(slot.begin(), slot.end(), 0);
    std::fill(leaf_of.begin(), leaf_of.end(), 0);

    for (std::size_t depth = 0; depth < cfg.max_depth && !frontier.empty(); ++depth) {
      const std::size_t width = frontier.size();
      // Node totals.
      std::vector<double> node_sum(width, 0.0);
      std::vector<double> node_cnt(width, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (in_sample[i] && slot[i] != kDone) {
          node_sum[slot[i]] += resid[i];
          node_cnt[slot[i]] += 1.0;
        }
      }
      // Best split of every frontier node, per feature.
      std::vector<std::vector<detail::SplitChoice>> best(dim, std::vector<detail::SplitChoice>(width));
      parallel_for(dim, cfg.workers, [&](std::size_t f) {
        const std::size_t nb = thresholds[f].size() + 1;
        if (nb < 2) return;
        std::vector<double> hsum(width * nb, 0.0), hcnt(width * nb, 0.0);
        const std::uint8_t* col = bins.data() + f * n;
        for (std::size_t i = 0; i < n; ++i) {
          if (!in_sample[i] || slot[i] == kDone) continue;
          const std::size_t h = static_cast<std::size_t>(slot[i]) * nb + col[i];
          hsum[h] += resid[i];
          hcnt[h] += 1.0;
        }
        for (std::size_t s = 0; s < width; ++s) {
          const double total = node_sum[s], count = node_cnt[s];
          if (count < 2) continue;
          const double parent = total * total / count;
          double ls = 0.0, lc = 0.0;
          for (std::size_t b = 0; b + 1 < nb; ++b) {
            ls += hsum[s * nb + b];
            lc += hcnt[s * nb + b];
            const double rc = count - lc;
            if (lc < 1 || rc < 1) continue;
            const double rs = total - ls;
            const double gain = ls * ls / lc + rs * rs / rc - parent;
            if (gain > best[f][s].gain) best[f][s] = {gain, static_cast<std::int32_t>(f), static_cast<std::int32_t>(b)};
          }
        }
      });

      std::vector<std::int32_t> next;
      std::vector<std::int32_t> left_child(width, -1);
      for (std::size_t s = 0; s < width; ++s) {
        detail::SplitChoice choice;
        for (std::size_t f = 0; f < dim; ++f) {
          // Strictly greater keeps the lowest feature (and, within it, the lowest bin) on ties.
          if (best[f][s].gain > choice.gain) choice = best[f][s];
        }
        const std::int32_t id = frontier[s];
        if (choice.feature < 0) continue;
        TreeNode& node = nodes[id];
        node.feature = choice.feature;
        node.threshold = thresholds[choice.feature][choice.bin];
        split_bin[id] = choice.bin;
        node.left = static_cast<std::int32_t>(nodes.size());
        node.right = node.left + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        split_bin.push_back(-1);
        split_bin.push_back(-1);
        left_child[s] = node.left;
        next.push_back(node.left);
        next.push_back(node.right);
      }
      // Route rows one level down. Every row is routed (not only sampled ones) so
      // leaf_of is valid for the prediction update.
      std::vector<std::int32_t> next_slot_of(nodes.size(), kDone);
      for (std::size_t k = 0; k < next.size(); ++k) next_slot_of[next[k]] = static_cast<std::int32_t>(k);
      for (std::size_t i = 0; i < n; ++i) {
        if (slot[i] == kDone) continue;
        const std::int32_t id = frontier[slot[i]];
        if (left_child[slot[i]] < 0) {
          slot[i] = kDone;
          continue;
        }
        const TreeNode& node = nodes[id];
        const std::int32_t child = bins[static_cast<std::size_t>(node.feature) * n + i] <= split_bin[id] ? node.left : node.right;
        leaf_of[i] = child;
        slot[i] = next_slot_of[child];
      }
      frontier.swap(next);
    }

    // Leaf values: mean residual of the sampled rows reaching the leaf.
    std::vector<double> lsum(nodes.size(), 0.0), lcnt(nodes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_sample[i]) continue;
      lsum[leaf_of[i]] += resid[i];
      lcnt[leaf_of[i]] += 1.0;
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k].is_leaf()) nodes[k].value = lcnt[k] > 0 ? lsum[k] / lcnt[k] : 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) pred[i] += cfg.shrinkage * nodes[leaf_of[i]].value;
    trees.emplace_back(std::move(nodes));
    result.stage_losses.push_back(training_mse());
  }
  result.model = GbrtModel(dim, mean, cfg.shrinkage, std::move(trees));
  return result;
}

}  // namespace reachcast
