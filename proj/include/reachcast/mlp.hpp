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

// Multilayer perceptron regressor: rectifier hidden layers, linear output clipped to
// [0, 1], trained on mean squared error with Adam.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "reachcast/error.hpp"
#include "reachcast/features.hpp"
#include "reachcast/parallel.hpp"
#include "reachcast/random.hpp"

namespace reachcast {

struct MlpConfig {
  std::vector<std::size_t> hidden{100};
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double l2 = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Threads sharing each mini-batch. The batch is always reduced over the same fixed
  // column blocks, so the worker count never changes the result.
  unsigned workers = 1;

  void validate() const {
    if (hidden.empty()) throw ParameterError("MLP needs at least one hidden layer");
    for (auto h : hidden) {
      if (h == 0) throw ParameterError("hidden layer sizes must be positive");
    }
    if (epochs == 0 || batch_size == 0) throw ParameterError("epochs and batch size must be positive");
    if (!(learning_rate > 0.0) || !(l2 >= 0.0)) throw ParameterError("learning rate must be positive, l2 non-negative");
  }
};

/// Layer parameters plus the input standardization learned on the training rows.
/// Columns of every batch matrix are samples.
class MlpModel {
 public:
  MlpModel() = default;

  /// All weights and biases zero; identity standardization.
  MlpModel(std::size_t input_dim, std::span<const std::size_t> hidden)
      : mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(input_dim))),
        scale_(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(input_dim))) {
    std::size_t in = input_dim;
    for (std::size_t h : hidden) {
      weights_.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(in)));
      biases_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h)));
      in = h;
    }
    weights_.push_back(Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(in)));
    biases_.push_back(Eigen::VectorXd::Zero(1));
  }

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  std::size_t layer_count() const noexcept { return weights_.size(); }

  std::vector<Eigen::MatrixXd>& weights() noexcept { return weights_; }
  const std::vector<Eigen::MatrixXd>& weights() const noexcept { return weights_; }
  std::vector<Eigen::VectorXd>& biases() noexcept { return biases_; }
  const std::vector<Eigen::VectorXd>& biases() const noexcept { return biases_; }

  const Eigen::VectorXd& feature_mean() const noexcept { return mean_; }
  const Eigen::VectorXd& feature_scale() const noexcept { return scale_; }
  void set_standardization(Eigen::VectorXd mean, Eigen::VectorXd scale) {
    if (mean.size() != mean_.size() || scale.size() != scale_.size())
      throw DimensionError("standardization vectors have wrong length");
    mean_ = std::move(mean);
    scale_ = std::move(scale);
  }

  /// Standardizes raw features in place (columns are samples).
  void standardize(Eigen::MatrixXd& x) const {
    x.colwise() -= mean_;
    x.array().colwise() *= scale_.array();
  }

  /// Unclipped network output for standardized inputs.
  Eigen::RowVectorXd forward(const Eigen::MatrixXd& standardized) const {
    Eigen::MatrixXd a = standardized;
    for (std::size_t l = 0; l + 1 < weights_.size(); ++l) {
      Eigen::MatrixXd z = weights_[l] * a;
      z.colwise() += biases_[l];
      a = z.cwiseMax(0.0);
    }
    Eigen::RowVectorXd out = weights_.back() * a;
    out.array() += biases_.back()(0);
    return out;
  }

  /// Predictions clipped to [0, 1] for raw feature columns.
  Eigen::RowVectorXd predict_batch(Eigen::MatrixXd raw) const {
    if (static_cast<std::size_t>(raw.rows()) != input_dim()) throw DimensionError("MLP input dimension mismatch");
    standardize(raw);
    return forward(raw).cwiseMax(0.0).cwiseMin(1.0);
  }

  double predict(std::span<const double> features) const {
    if (features.size() != input_dim()) throw DimensionError("MLP input dimension mismatch");
    Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
    return predict_batch(std::move(x))(0);
  }

  bool all_finite() const {
    for (const auto& w : weights_) {
      if (!w.allFinite()) return false;
    }
    for (const auto& b : biases_) {
      if (!b.allFinite()) return false;
    }
    return mean_.allFinite() && scale_.allFinite();
  }

  friend bool operator==(const MlpModel& a, const MlpModel& b) {
    auto same = [](const auto& x, const auto& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].rows() != y[i].rows() || x[i].cols() != y[i].cols() || x[i] != y[i]) return false;
      }
      return true;
    };
    return same(a.weights_, b.weights_) && same(a.biases_, b.biases_) && a.mean_ == b.mean_ && a.scale_ == b.scale_;
  }

 private:
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  double loss = 0.0;  // data term only, summed over the columns given
};

/// Sum over the given columns of 0.5 * (output - y)^2 and its gradient with respect
/// to every weight and bias (no penalty, no averaging). Inputs are standardized.
inline MlpGradients mlp_sum_gradients(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& y) {
  const std::size_t layers = model.layer_count();
  std::vector<Eigen::MatrixXd> acts;  // acts[0] = x, acts[l + 1] = output of layer l
  acts.reserve(layers + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = model.weights()[l] * acts.back();
    z.colwise() += model.biases()[l];
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  MlpGradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Eigen::MatrixXd delta = acts.back() - y;  // 1 x B
  g.loss = 0.5 * delta.squaredNorm();
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = delta * acts[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = model.weights()[l].transpose() * delta;
      delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

/// Mini-batch objective: mean of 0.5 * (output - y)^2 plus l2 / (2 * batch) times
/// the squared weight norm (biases unpenalized), with its gradient.
inline MlpGradients mlp_loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& x,
                                          const Eigen::RowVectorXd& y, double l2) {
  const double batch = static_cast<double>(x.cols());
  MlpGradients g = mlp_sum_gradients(model, x, y);
  double penalty = 0.0;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    g.weights[l] = g.weights[l] / batch + (l2 / batch) * model.weights()[l];
    g.biases[l] /= batch;
    penalty += model.weights()[l].squaredNorm();
  }
  g.loss = g.loss / batch + 0.5 * l2 * penalty / batch;
  return g;
}

struct MlpTrainResult {
  MlpModel model;
  double final_loss = 0.0;              // mean data loss over the last epoch
  std::vector<double> epoch_losses;     // mean squared error per epoch
};

namespace detail {

// Column block size of the mini-batch reduction.
inline constexpr Eigen::Index kMlpReductionBlock = 64;

inline void fill_columns(const Dataset& ds, std::span<const std::size_t> idx, Eigen::MatrixXd& x,
                         Eigen::RowVectorXd& y) {
  const auto dim = static_cast<Eigen::Index>(ds.feature_dim());
  x.resize(dim, static_cast<Eigen::Index>(idx.size()));
  y.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    ds.features(idx[c], std::span<double>(x.col(static_cast<Eigen::Index>(c)).data(), ds.feature_dim()));
    y(static_cast<Eigen::Index>(c)) = ds.label(idx[c]);
  }
}

}  // namespace detail

/// Per-feature mean and inverse standard deviation over the dataset rows; constant
/// features get scale 1.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> feature_standardization(const Dataset& ds) {
  const auto dim = static_cast<Eigen::Index>(ds.feature_dim());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim), sq = Eigen::VectorXd::Zero(dim);
  std::vector<double> x(ds.feature_dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ds.features(i, x);
    Eigen::Map<const Eigen::VectorXd> v(x.data(), dim);
    sum += v;
    sq += v.cwiseProduct(v);
  }
  const double n = std::max<double>(1.0, static_cast<double>(ds.size()));
  Eigen::VectorXd mean = sum / n;
  Eigen::VectorXd var = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
  Eigen::VectorXd scale(dim);
  for (Eigen::Index f = 0; f < dim; ++f) scale(f) = var(f) > 1e-24 ? 1.0 / std::sqrt(var(f)) : 1.0;
  return {mean, scale};
}

/// Glorot-uniform weights, zero biases.
inline MlpModel init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, Rng& rng) {
  MlpModel m(input_dim, hidden);
  for (auto& w : m.weights()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = (2.0 * uniform01(rng) - 1.0) * bound;
    }
  }
  return m;
}

inline MlpTrainResult train_mlp(const Dataset& ds, const MlpConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (ds.empty()) throw TrainingError("cannot train MLP on an empty dataset");

  Rng init_rng = make_rng(seed, 0x1);
  MlpTrainResult result{init_mlp(ds.feature_dim(), cfg.hidden, init_rng), 0.0, {}};
  MlpModel& model = result.model;
  auto [mean, scale] = feature_standardization(ds);
  model.set_standardization(mean, scale);

  const std::size_t layers = model.layer_count();
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  for (std::size_t l = 0; l < layers; ++l) {
    mw.push_back(Eigen::MatrixXd::Zero(model.weights()[l].rows(), model.weights()[l].cols()));
    vw.push_back(mw.back());
    mb.push_back(Eigen::VectorXd::Zero(model.biases()[l].size()));
    vb.push_back(mb.back());
  }

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd x;
  Eigen::RowVectorXd y;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = make_rng(seed, 0x2, epoch);
    shuffle(std::span<std::size_t>(order), rng);
    double epoch_sq = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      detail::fill_columns(ds, std::span<const std::size_t>(order).subspan(start, count), x, y);
      model.standardize(x);

      // Fixed column blocks, summed in block order.
      const auto cols = x.cols();
      const std::size_t blocks = static_cast<std::size_t>((cols + detail::kMlpReductionBlock - 1) / detail::kMlpReductionBlock);
      std::vector<MlpGradients> parts(blocks);
      parallel_chunks(blocks, blocks, cfg.workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
          const auto c0 = static_cast<Eigen::Index>(k) * detail::kMlpReductionBlock;
          const auto nc = std::min(detail::kMlpReductionBlock, cols - c0);
          parts[k] = mlp_sum_gradients(model, x.middleCols(c0, nc), y.segment(c0, nc));
        }
      });
      MlpGradients g = std::move(parts[0]);
      for (std::size_t k = 1; k < blocks; ++k) {
        for (std::size_t l = 0; l < layers; ++l) {
          g.weights[l] += parts[k].weights[l];
          g.biases[l] += parts[k].biases[l];
        }
        g.loss += parts[k].loss;
      }
      epoch_sq += 2.0 * g.loss;

      ++step;
      const double n = static_cast<double>(count);
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const double lr = cfg.learning_rate * std::sqrt(c2) / c1;
      for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd gw = g.weights[l] / n + (cfg.l2 / n) * model.weights()[l];
        Eigen::VectorXd gb = g.biases[l] / n;
        mw[l] = cfg.beta1 * mw[l] + (1.0 - cfg.beta1) * gw;
        vw[l] = cfg.beta2 * vw[l] + (1.0 - cfg.beta2) * gw.cwiseProduct(gw);
        mb[l] = cfg.beta1 * mb[l] + (1.0 - cfg.beta1) * gb;
        vb[l] = cfg.beta2 * vb[l] + (1.0 - cfg.beta2) * gb.cwiseProduct(gb);
        model.weights()[l].array() -= lr * mw[l].array() / (vw[l].array().sqrt() + cfg.epsilon);
        model.biases()[l].array() -= lr * mb[l].array() / (vb[l].array().sqrt() + cfg.epsilon);
      }
    }
    const double mse = epoch_sq / static_cast<double>(ds.size());
    if (!std::isfinite(mse) || !model.all_finite())
      throw TrainingError("MLP training diverged at epoch " + std::to_string(epoch + 1));
    result.epoch_losses.push_back(mse);
  }
  result.final_loss = result.epoch_losses.back();
  return result;
}

}  // namespace reachcast
