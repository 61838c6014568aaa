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

// Versioned text container for trained regressors.
//
//   reachcast-model v1 mlp
//   input_dim <n>
//   layers <L>
//   mean <n values>
//   scale <n values>
//   layer <rows> <cols>          (L times, followed by:)
//   w <rows*cols values, row-major>
//   b <rows values>
//   end
//
//   reachcast-model v1 gbrt
//   input_dim <n>
//   initial <value>
//   shrinkage <value>
//   trees <T>
//   tree <node count>            (T times, followed by one line per node:)
//   <feature> <threshold> <left> <right> <value>
//   end
//
// Numbers use the shortest decimal form that parses back to the same double, so a
// save/load round trip is lossless.

#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "reachcast/error.hpp"
#include "reachcast/gbrt.hpp"
#include "reachcast/mlp.hpp"
#include "reachcast/text.hpp"

namespace reachcast {

using Model = std::variant<MlpModel, GbrtModel>;

inline constexpr std::string_view kModelMagic = "reachcast-model";
inline constexpr std::string_view kModelVersion = "v1";

namespace detail {

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  std::vector<std::string_view> line(std::string_view expect_key, std::size_t min_fields = 1) {
    if (!std::getline(in_, buf_)) throw FormatError("model file truncated (expected '" + std::string(expect_key) + "')");
    auto f = text::split_ws(buf_);
    if (f.empty() || f[0] != expect_key || f.size() < min_fields)
      throw FormatError("model file: expected '" + std::string(expect_key) + "' line");
    return f;
  }

  static double number(std::string_view s) {
    auto v = text::parse_double(s);
    if (!v) throw FormatError("model file: bad number '" + std::string(s) + "'");
    return *v;
  }

  static std::size_t count(std::string_view s) {
    auto v = text::parse_int<std::size_t>(s);
    if (!v) throw FormatError("model file: bad count '" + std::string(s) + "'");
    return *v;
  }

  /// Reads `key v1 v2 ... vn` with exactly n values.
  std::vector<double> values(std::string_view key, std::size_t n) {
    auto f = line(key);
    if (f.size() != n + 1) throw FormatError("model file: '" + std::string(key) + "' has wrong value count");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = number(f[i + 1]);
    return out;
  }

 private:
  std::istream& in_;
  std::string buf_;
};

/// Reads the magic line and returns the type tag.
inline std::string read_model_header(std::istream& in) {
  std::string head;
  if (!std::getline(in, head)) throw FormatError("model file is empty");
  auto f = text::split_ws(head);
  if (f.size() != 3 || f[0] != kModelMagic) throw FormatError("not a reachcast model file");
  if (f[1] != kModelVersion) throw FormatError("unsupported model version '" + std::string(f[1]) + "'");
  return std::string(f[2]);
}

inline void write_values(std::ostream& out, std::string_view key, const double* data, std::size_t n) {
  out << key;
  for (std::size_t i = 0; i < n; ++i) out << ' ' << text::exact(data[i]);
  out << '\n';
}

inline MlpModel read_mlp_body(std::istream& in) {
  ModelReader r(in);
  const std::size_t dim = ModelReader::count(r.line("input_dim", 2)[1]);
  const std::size_t layers = ModelReader::count(r.line("layers", 2)[1]);
  if (layers < 2) throw FormatError("MLP needs at least two layers");
  auto mean = r.values("mean", dim);
  auto scale = r.values("scale", dim);
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  std::size_t in_dim = dim;
  for (std::size_t l = 0; l < layers; ++l) {
    auto shape = r.line("layer", 3);
    const std::size_t rows = ModelReader::count(shape[1]), cols = ModelReader::count(shape[2]);
    if (cols != in_dim) throw FormatError("MLP layer shapes do not chain");
    auto wv = r.values("w", rows * cols);
    auto bv = r.values("b", rows);
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wv[i * cols + j];
    w.push_back(std::move(m));
    b.push_back(Eigen::Map<Eigen::VectorXd>(bv.data(), static_cast<Eigen::Index>(rows)));
    in_dim = rows;
  }
  if (in_dim != 1) throw FormatError("MLP output layer must have one unit");
  r.line("end");
  std::vector<std::size_t> hidden;
  for (std::size_t l = 0; l + 1 < layers; ++l) hidden.push_back(static_cast<std::size_t>(w[l].rows()));
  MlpModel model(dim, hidden);
  model.weights() = std::move(w);
  model.biases() = std::move(b);
  model.set_standardization(Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(dim)),
                            Eigen::Map<Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(dim)));
  return model;
}

inline GbrtModel read_gbrt_body(std::istream& in) {
  ModelReader r(in);
  const std::size_t dim = ModelReader::count(r.line("input_dim", 2)[1]);
  const double initial = ModelReader::number(r.line("initial", 2)[1]);
  const double shrinkage = ModelReader::number(r.line("shrinkage", 2)[1]);
  const std::size_t count = ModelReader::count(r.line("trees", 2)[1]);
  std::vector<RegressionTree> trees;
  trees.reserve(count);
  std::string buf;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t nodes = ModelReader::count(r.line("tree", 2)[1]);
    if (nodes == 0) throw FormatError("empty regression tree");
    std::vector<TreeNode> tree(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
      if (!std::getline(in, buf)) throw FormatError("model file truncated inside a tree");
      auto f = text::split_ws(buf);
      if (f.size() != 5) throw FormatError("tree node line needs 5 fields");
      auto feature = text::parse_int<std::int32_t>(f[0]);
      auto left = text::parse_int<std::int32_t>(f[2]);
      auto right = text::parse_int<std::int32_t>(f[3]);
      if (!feature || !left || !right) throw FormatError("bad tree node indices");
      tree[k] = {*feature, ModelReader::number(f[1]), *left, *right, ModelReader::number(f[4])};
      if (!tree[k].is_leaf()) {
        auto in_range = [&](std::int32_t c) { return c > static_cast<std::int32_t>(k) && c < static_cast<std::int32_t>(nodes); };
        if (!in_range(*left) || !in_range(*right)) throw FormatError("tree child index out of range");
      }
    }
    trees.emplace_back(std::move(tree));
  }
  r.line("end");
  try {
    return GbrtModel(dim, initial, shrinkage, std::move(trees));
  } catch (const DimensionError& e) {
    throw FormatError(e.what());
  }
}

}  // namespace detail

inline void save_model(std::ostream& out, const MlpModel& m) {
  out << kModelMagic << ' ' << kModelVersion << " mlp\n";
  out << "input_dim " << m.input_dim() << '\n';
  out << "layers " << m.layer_count() << '\n';
  detail::write_values(out, "mean", m.feature_mean().data(), m.input_dim());
  detail::write_values(out, "scale", m.feature_scale().data(), m.input_dim());
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const auto& w = m.weights()[l];
    out << "layer " << w.rows() << ' ' << w.cols() << '\n';
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = w;
    detail::write_values(out, "w", rm.data(), static_cast<std::size_t>(rm.size()));
    detail::write_values(out, "b", m.biases()[l].data(), static_cast<std::size_t>(m.biases()[l].size()));
  }
  out << "end\n";
}

inline void save_model(std::ostream& out, const GbrtModel& m) {
  out << kModelMagic << ' ' << kModelVersion << " gbrt\n";
  out << "input_dim " << m.input_dim() << '\n';
  out << "initial " << text::exact(m.initial()) << '\n';
  out << "shrinkage " << text::exact(m.shrinkage()) << '\n';
  out << "trees " << m.trees().size() << '\n';
  for (const auto& t : m.trees()) {
    out << "tree " << t.nodes().size() << '\n';
    for (const auto& n : t.nodes())
      out << n.feature << ' ' << text::exact(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << text::exact(n.value)
          << '\n';
  }
  out << "end\n";
}

inline void save_model(std::ostream& out, const Model& m) {
  std::visit([&](const auto& model) { save_model(out, model); }, m);
}

inline Model load_model(std::istream& in) {
  const std::string tag = detail::read_model_header(in);
  if (tag == "mlp") return detail::read_mlp_body(in);
  if (tag == "gbrt") return detail::read_gbrt_body(in);
  throw FormatError("unknown model type '" + tag + "'");
}

inline MlpModel load_mlp(std::istream& in) {
  const std::string tag = detail::read_model_header(in);
  if (tag != "mlp") throw ModelTypeError("expected an mlp model, found '" + tag + "'");
  return detail::read_mlp_body(in);
}

inline GbrtModel load_gbrt(std::istream& in) {
  const std::string tag = detail::read_model_header(in);
  if (tag != "gbrt") throw ModelTypeError("expected a gbrt model, found '" + tag + "'");
  return detail::read_gbrt_body(in);
}

}  // namespace reachcast
