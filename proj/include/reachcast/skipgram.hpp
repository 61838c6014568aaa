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

// Skip-gram with negative sampling over walk corpora.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "reachcast/embedding.hpp"
#include "reachcast/error.hpp"
#include "reachcast/random.hpp"
#include "reachcast/walks.hpp"

namespace reachcast {

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

struct PlainAccess {
  static double load(const double& x) { return x; }
  static void store(double& x, double v) { x = v; }
};

// Relaxed atomic access for lock-free concurrent training: racing updates may be
// lost but every access is well defined.
struct RelaxedAccess {
  static double load(const double& x) { return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed); }
  static void store(double& x, double v) { std::atomic_ref<double>(x).store(v, std::memory_order_relaxed); }
};

}  // namespace detail

/// Per-pair objective: log s(e.c) + sum_k log s(-e.n_k).
inline double sgns_objective(std::span<const double> input, std::span<const double> context,
                             std::span<const std::span<const double>> negatives) {
  double j = detail::log_sigmoid(detail::dot(input, context));
  for (auto n : negatives) j += detail::log_sigmoid(-detail::dot(input, n));
  return j;
}

struct SgnsGradient {
  std::vector<double> input;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};

/// Analytic gradient of sgns_objective with respect to every vector involved.
inline SgnsGradient sgns_gradient(std::span<const double> input, std::span<const double> context,
                                  std::span<const std::span<const double>> negatives) {
  const std::size_t d = input.size();
  SgnsGradient g{std::vector<double>(d, 0.0), std::vector<double>(d), {}};
  const double pos = 1.0 - detail::sigmoid(detail::dot(input, context));
  for (std::size_t k = 0; k < d; ++k) {
    g.input[k] += pos * context[k];
    g.context[k] = pos * input[k];
  }
  for (auto n : negatives) {
    const double s = detail::sigmoid(detail::dot(input, n));
    std::vector<double> gn(d);
    for (std::size_t k = 0; k < d; ++k) {
      g.input[k] -= s * n[k];
      gn[k] = -s * input[k];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

/// One ascent step of size `lr` on the per-pair objective. Context and negative
/// vectors are updated in sequence with the pre-step input vector; the input vector
/// receives its accumulated gradient last. `scratch` must hold input.size() values.
template <class Access = detail::PlainAccess>
void sgns_step(std::span<double> input, std::span<double> context, std::span<const std::span<double>> negatives,
               double lr, std::span<double> scratch) {
  const std::size_t d = input.size();
  std::fill(scratch.begin(), scratch.end(), 0.0);
  auto update = [&](std::span<double> target, double label) {
    double f = 0.0;
    for (std::size_t k = 0; k < d; ++k) f += Access::load(input[k]) * Access::load(target[k]);
    const double g = lr * (label - detail::sigmoid(f));
    for (std::size_t k = 0; k < d; ++k) {
      const double t = Access::load(target[k]);
      scratch[k] += g * t;
      Access::store(target[k], t + g * Access::load(input[k]));
    }
  };
  update(context, 1.0);
  for (auto n : negatives) update(n, 0.0);
  for (std::size_t k = 0; k < d; ++k) Access::store(input[k], Access::load(input[k]) + scratch[k]);
}

/// Draws nodes with probability proportional to corpus frequency^0.75.
class NegativeSampler {
 public:
  NegativeSampler(const WalkCorpus& corpus, std::size_t node_count) : cumulative_(node_count) {
    std::vector<double> freq(node_count, 0.0);
    for (const auto& w : corpus) {
      for (NodeId v : w) {
        if (v >= node_count) throw IndexError("walk corpus references node outside embedding range");
        freq[v] += 1.0;
      }
    }
    double total = 0.0;
    for (std::size_t v = 0; v < node_count; ++v) {
      total += std::pow(freq[v], 0.75);
      cumulative_[v] = total;
    }
    if (!(total > 0.0)) throw TrainingError("walk corpus is empty");
  }

  NodeId operator()(Rng& rng) const {
    const double x = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    return static_cast<NodeId>(std::min<std::ptrdiff_t>(it - cumulative_.begin(), cumulative_.size() - 1));
  }

 private:
  std::vector<double> cumulative_;
};

/// Owns the input and context vectors during training.
class SkipGramTrainer {
 public:
  SkipGramTrainer(std::size_t node_count, const WalkConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), seed_(seed), input_(node_count, cfg.dimensions), context_(node_count, cfg.dimensions) {
    cfg_.validate();
    Rng rng = make_rng(seed, 0x1417);
    const double half = 0.5 / static_cast<double>(cfg_.dimensions);
    for (double& v : input_.data()) v = (uniform01(rng) * 2.0 - 1.0) * half;
  }

  const EmbeddingMatrix& input() const noexcept { return input_; }
  const EmbeddingMatrix& context() const noexcept { return context_; }

  /// Runs cfg.epochs passes over the corpus with a linearly decaying learning rate.
  void fit(const WalkCorpus& corpus) {
    std::size_t tokens = 0;
    for (const auto& w : corpus) tokens += w.size();
    if (tokens == 0) throw TrainingError("walk corpus is empty");
    NegativeSampler sampler(corpus, input_.rows());
    const double total_steps = static_cast<double>(tokens) * static_cast<double>(cfg_.epochs);
    if (cfg_.mode == TrainingMode::deterministic || cfg_.workers <= 1) {
      std::size_t done = 0;
      for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
        Rng rng = make_rng(seed_, 0xe90c, epoch);
        train_range<detail::PlainAccess>(corpus, 0, corpus.size(), sampler, rng, total_steps, [&] { return done++; });
      }
      return;
    }
    std::atomic<std::size_t> done{0};
    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
      std::vector<std::thread> pool;
      const unsigned w = cfg_.workers;
      for (unsigned t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
          Rng rng = make_rng(seed_, 0xe90c, epoch, t);
          train_range<detail::RelaxedAccess>(corpus, corpus.size() * t / w, corpus.size() * (t + 1) / w, sampler,
                                             rng, total_steps,
                                             [&] { return done.fetch_add(1, std::memory_order_relaxed); });
        });
      }
      for (auto& th : pool) th.join();
    }
  }

  /// Mean per-pair objective over every (center, context) pair in the corpus, with
  /// negatives drawn from a fixed seed so before/after values are comparable.
  double mean_objective(const WalkCorpus& corpus, std::uint64_t negative_seed) const {
    NegativeSampler sampler(corpus, input_.rows());
    Rng rng = make_rng(negative_seed);
    std::vector<std::span<const double>> negs;
    double total = 0.0;
    std::size_t pairs = 0;
    for_each_pair(corpus, 0, corpus.size(), [&](NodeId center, NodeId ctx) {
      negs.clear();
      for (std::size_t k = 0; k < cfg_.negatives_per_positive; ++k) {
        const NodeId n = sampler(rng);
        if (n != ctx) negs.push_back(context_.row(n));
      }
      total += sgns_objective(input_.row(center), context_.row(ctx), negs);
      ++pairs;
    });
    return pairs ? total / static_cast<double>(pairs) : 0.0;
  }

 private:
  template <class F>
  void for_each_pair(const WalkCorpus& corpus, std::size_t begin, std::size_t end, F&& f) const {
    const auto window = static_cast<std::ptrdiff_t>(cfg_.window);
    for (std::size_t w = begin; w < end; ++w) {
      const auto& walk = corpus[w];
      const auto len = static_cast<std::ptrdiff_t>(walk.size());
      for (std::ptrdiff_t i = 0; i < len; ++i) {
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - window); j <= std::min(len - 1, i + window); ++j) {
          if (j != i) f(walk[i], walk[j]);
        }
      }
    }
  }

  template <class Access, class Tick>
  void train_range(const WalkCorpus& corpus, std::size_t begin, std::size_t end, const NegativeSampler& sampler,
                   Rng& rng, double total_steps, Tick&& tick) {
    const double lr0 = cfg_.initial_learning_rate;
    std::vector<double> scratch(cfg_.dimensions);
    std::vector<std::span<double>> negs;
    const auto window = static_cast<std::ptrdiff_t>(cfg_.window);
    for (std::size_t w = begin; w < end; ++w) {
      const auto& walk = corpus[w];
      const auto len = static_cast<std::ptrdiff_t>(walk.size());
      for (std::ptrdiff_t i = 0; i < len; ++i) {
        const double progress = static_cast<double>(tick()) / total_steps;
        const double lr = lr0 * std::max(1e-4, 1.0 - (1.0 - 1e-4) * progress);
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - window); j <= std::min(len - 1, i + window); ++j) {
          if (j == i) continue;
          const NodeId ctx = walk[j];
          negs.clear();
          for (std::size_t k = 0; k < cfg_.negatives_per_positive; ++k) {
            const NodeId n = sampler(rng);
            if (n != ctx) negs.push_back(context_.row(n));
          }
          sgns_step<Access>(input_.row(walk[i]), context_.row(ctx), negs, lr, scratch);
        }
      }
    }
  }

  WalkConfig cfg_;
  std::uint64_t seed_;
  EmbeddingMatrix input_;
  EmbeddingMatrix context_;
};

/// Trains input vectors for `node_count` nodes on the corpus.
inline EmbeddingMatrix train_skipgram(const WalkCorpus& corpus, std::size_t node_count, const WalkConfig& cfg,
                                      std::uint64_t seed) {
  SkipGramTrainer trainer(node_count, cfg, seed);
  trainer.fit(corpus);
  if (!trainer.input().all_finite()) throw TrainingError("skip-gram training produced non-finite vectors");
  return trainer.input();
}

/// Walks plus skip-gram in one call; the two stages use separate substreams of `seed`.
inline EmbeddingMatrix embed_graph(const DirectedGraph& g, const WalkConfig& cfg, std::uint64_t seed,
                                   unsigned workers = 1) {
  WalkCorpus corpus = generate_walks(g, cfg, derive_seed(seed, 1), workers);
  return train_skipgram(corpus, g.node_count(), cfg, derive_seed(seed, 2));
}

}  // namespace reachcast
