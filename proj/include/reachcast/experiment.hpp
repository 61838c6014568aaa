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

// The full evaluation grid: for every (max_p, trial) pair draw activation
// probabilities, simulate r cascades per node and estimate the actual reach matrix;
// for every portion sample cascades, estimate labels and score the sampled estimate
// itself (the benchmark) and each trained regressor against the actual matrix.
//
// With an output directory every stage artifact is written under
//   <out>/maxp<i>_trial<t>/            cascades.txt, actual.tsv
//   <out>/maxp<i>_trial<t>/portion<j>/ labels.tsv, model_<name>.txt, result.txt
// and a cell whose result.txt matches the current configuration is not recomputed.

#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reachcast/config.hpp"
#include "reachcast/embedding.hpp"
#include "reachcast/error.hpp"
#include "reachcast/features.hpp"
#include "reachcast/gbrt.hpp"
#include "reachcast/generators.hpp"
#include "reachcast/graph.hpp"
#include "reachcast/icm.hpp"
#include "reachcast/mlp.hpp"
#include "reachcast/model_io.hpp"
#include "reachcast/parallel.hpp"
#include "reachcast/predict.hpp"
#include "reachcast/random.hpp"
#include "reachcast/reach.hpp"
#include "reachcast/skipgram.hpp"
#include "reachcast/text.hpp"
#include "reachcast/walks.hpp"

namespace reachcast {

enum class ModelKind { mlp, gbrt };

inline std::string_view model_name(ModelKind k) { return k == ModelKind::mlp ? "mlp" : "gbrt"; }

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "mlp") return ModelKind::mlp;
  if (s == "gbrt") return ModelKind::gbrt;
  throw ParameterError("unknown model '" + std::string(s) + "' (expected mlp or gbrt)");
}

struct ExperimentConfig {
  // Edge list to load. When empty, a scale_free_directed graph with
  // synthetic_nodes nodes is generated instead.
  std::string graph_path;
  std::size_t synthetic_nodes = 0;
  std::uint64_t synthetic_seed = 7;

  std::vector<double> max_p{0.05, 0.1};
  int r = 20;
  std::vector<double> portions{0.10, 0.20, 0.40, 0.60};
  WalkConfig walk;
  MlpConfig mlp;
  GbrtConfig gbrt;
  std::vector<ModelKind> models{ModelKind::mlp, ModelKind::gbrt};
  std::uint64_t seed = 1;
  std::string output_dir;
  std::size_t trials = 1;
  // Portions of one (max_p, trial) pair drawn as nested prefixes of one permutation
  // instead of independently.
  bool nested_sampling = false;
  double zero_keep_fraction = 1.0;
  unsigned workers = 1;
  unsigned parallel_cells = 1;

  void validate() const {
    if (graph_path.empty() && synthetic_nodes < 2) throw ParameterError("experiment needs a graph path or synthetic_nodes >= 2");
    if (max_p.empty()) throw ParameterError("experiment needs at least one max_p value");
    for (double p : max_p) {
      if (!(p > 0.0 && p <= 1.0)) throw ParameterError("max_p values must lie in (0, 1]");
    }
    if (r < 1) throw ParameterError("r must be at least 1");
    if (portions.empty()) throw ParameterError("experiment needs at least one portion");
    for (double f : portions) {
      if (!(f > 0.0 && f <= 1.0)) throw ParameterError("portions must lie in (0, 1]");
    }
    if (trials < 1) throw ParameterError("trials must be at least 1");
    if (!(zero_keep_fraction > 0.0 && zero_keep_fraction <= 1.0)) throw ParameterError("zero_keep must lie in (0, 1]");
    for (std::size_t a = 0; a < models.size(); ++a)
      for (std::size_t b = a + 1; b < models.size(); ++b)
        if (models[a] == models[b]) throw ParameterError("model listed twice");
    walk.validate();
    mlp.validate();
    gbrt.validate();
  }
};

namespace detail {

inline std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + text::exact(v[i]);
  return s;
}

template <class T>
std::string join_counts(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace detail

/// Every key understood by experiment_config_from.
inline const std::vector<std::string>& experiment_config_keys() {
  static const std::vector<std::string> keys{
      "graph", "synthetic_nodes", "synthetic_seed", "max_p", "r", "portions", "models", "seed", "output_dir",
      "trials", "nested_sampling", "zero_keep", "workers", "parallel_cells", "dims", "walk_length", "window",
      "walks_per_node", "p", "q", "embed_epochs", "embed_learning_rate", "negatives", "embed_mode", "mlp_hidden",
      "mlp_epochs", "mlp_batch_size", "mlp_learning_rate", "mlp_l2", "gbrt_trees", "gbrt_max_depth",
      "gbrt_shrinkage", "gbrt_subsample", "gbrt_thresholds", "gbrt_quantile_sample"};
  return keys;
}

/// Config from a flat key/value file. Unknown keys are rejected so typos surface.
inline ExperimentConfig experiment_config_from(const KeyValueFile& kv) {
  const auto& known = experiment_config_keys();
  for (const auto& [k, v] : kv.values()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ParameterError("unknown config key '" + k + "'");
  }
  ExperimentConfig c;
  c.graph_path = kv.get("graph").value_or("");
  c.synthetic_nodes = kv.get_int<std::size_t>("synthetic_nodes", c.synthetic_nodes);
  c.synthetic_seed = kv.get_int<std::uint64_t>("synthetic_seed", c.synthetic_seed);
  c.max_p = kv.get_doubles("max_p", c.max_p);
  c.r = kv.get_int<int>("r", c.r);
  c.portions = kv.get_doubles("portions", c.portions);
  if (kv.has("models")) {
    c.models.clear();
    for (const auto& m : kv.get_strings("models", {})) {
      if (m != "none") c.models.push_back(parse_model_kind(m));
    }
  }
  c.seed = kv.get_int<std::uint64_t>("seed", c.seed);
  c.output_dir = kv.get("output_dir").value_or("");
  c.trials = kv.get_int<std::size_t>("trials", c.trials);
  c.nested_sampling = kv.get_bool("nested_sampling", c.nested_sampling);
  c.zero_keep_fraction = kv.get_double("zero_keep", c.zero_keep_fraction);
  c.workers = kv.get_int<unsigned>("workers", c.workers);
  c.parallel_cells = kv.get_int<unsigned>("parallel_cells", c.parallel_cells);

  WalkConfig& w = c.walk;
  w.dimensions = kv.get_int<std::size_t>("dims", w.dimensions);
  w.walk_length = kv.get_int<std::size_t>("walk_length", w.walk_length);
  w.window = kv.get_int<std::size_t>("window", w.window);
  w.walks_per_node = kv.get_int<std::size_t>("walks_per_node", w.walks_per_node);
  w.return_param = kv.get_double("p", w.return_param);
  w.inout_param = kv.get_double("q", w.inout_param);
  w.epochs = kv.get_int<std::size_t>("embed_epochs", w.epochs);
  w.initial_learning_rate = kv.get_double("embed_learning_rate", w.initial_learning_rate);
  w.negatives_per_positive = kv.get_int<std::size_t>("negatives", w.negatives_per_positive);
  if (auto mode = kv.get("embed_mode")) {
    if (*mode == "deterministic") w.mode = TrainingMode::deterministic;
    else if (*mode == "fast") w.mode = TrainingMode::fast;
    else throw ParameterError("embed_mode must be deterministic or fast");
  }

  if (kv.has("mlp_hidden")) {
    c.mlp.hidden.clear();
    for (double h : kv.get_doubles("mlp_hidden", {})) c.mlp.hidden.push_back(static_cast<std::size_t>(h));
  }
  c.mlp.epochs = kv.get_int<std::size_t>("mlp_epochs", c.mlp.epochs);
  c.mlp.batch_size = kv.get_int<std::size_t>("mlp_batch_size", c.mlp.batch_size);
  c.mlp.learning_rate = kv.get_double("mlp_learning_rate", c.mlp.learning_rate);
  c.mlp.l2 = kv.get_double("mlp_l2", c.mlp.l2);
  c.gbrt.trees = kv.get_int<std::size_t>("gbrt_trees", c.gbrt.trees);
  c.gbrt.max_depth = kv.get_int<std::size_t>("gbrt_max_depth", c.gbrt.max_depth);
  c.gbrt.shrinkage = kv.get_double("gbrt_shrinkage", c.gbrt.shrinkage);
  c.gbrt.subsample = kv.get_double("gbrt_subsample", c.gbrt.subsample);
  c.gbrt.candidate_thresholds = kv.get_int<std::size_t>("gbrt_thresholds", c.gbrt.candidate_thresholds);
  c.gbrt.quantile_sample = kv.get_int<std::size_t>("gbrt_quantile_sample", c.gbrt.quantile_sample);
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(std::istream& in) { return experiment_config_from(KeyValueFile::parse(in)); }

/// Canonical key/value form. Execution-only settings (output directory, worker
/// counts) are left out when `results_only` is set, since they never change results.
inline KeyValueFile to_key_values(const ExperimentConfig& c, bool results_only = false) {
  KeyValueFile kv;
  kv.set("graph", c.graph_path);
  kv.set("synthetic_nodes", std::to_string(c.synthetic_nodes));
  kv.set("synthetic_seed", std::to_string(c.synthetic_seed));
  kv.set("max_p", detail::join_numbers(c.max_p));
  kv.set("r", std::to_string(c.r));
  kv.set("portions", detail::join_numbers(c.portions));
  std::string models;
  for (std::size_t i = 0; i < c.models.size(); ++i) models += (i ? "," : "") + std::string(model_name(c.models[i]));
  kv.set("models", models.empty() ? "none" : models);
  kv.set("seed", std::to_string(c.seed));
  kv.set("trials", std::to_string(c.trials));
  kv.set("nested_sampling", c.nested_sampling ? "true" : "false");
  kv.set("zero_keep", text::exact(c.zero_keep_fraction));
  kv.set("dims", std::to_string(c.walk.dimensions));
  kv.set("walk_length", std::to_string(c.walk.walk_length));
  kv.set("window", std::to_string(c.walk.window));
  kv.set("walks_per_node", std::to_string(c.walk.walks_per_node));
  kv.set("p", text::exact(c.walk.return_param));
  kv.set("q", text::exact(c.walk.inout_param));
  kv.set("embed_epochs", std::to_string(c.walk.epochs));
  kv.set("embed_learning_rate", text::exact(c.walk.initial_learning_rate));
  kv.set("negatives", std::to_string(c.walk.negatives_per_positive));
  kv.set("embed_mode", c.walk.mode == TrainingMode::fast ? "fast" : "deterministic");
  kv.set("mlp_hidden", detail::join_counts(c.mlp.hidden));
  kv.set("mlp_epochs", std::to_string(c.mlp.epochs));
  kv.set("mlp_batch_size", std::to_string(c.mlp.batch_size));
  kv.set("mlp_learning_rate", text::exact(c.mlp.learning_rate));
  kv.set("mlp_l2", text::exact(c.mlp.l2));
  kv.set("gbrt_trees", std::to_string(c.gbrt.trees));
  kv.set("gbrt_max_depth", std::to_string(c.gbrt.max_depth));
  kv.set("gbrt_shrinkage", text::exact(c.gbrt.shrinkage));
  kv.set("gbrt_subsample", text::exact(c.gbrt.subsample));
  kv.set("gbrt_thresholds", std::to_string(c.gbrt.candidate_thresholds));
  kv.set("gbrt_quantile_sample", std::to_string(c.gbrt.quantile_sample));
  if (!results_only) {
    kv.set("output_dir", c.output_dir);
    kv.set("workers", std::to_string(c.workers));
    kv.set("parallel_cells", std::to_string(c.parallel_cells));
  }
  return kv;
}

inline std::uint64_t config_fingerprint(const ExperimentConfig& c) {
  std::ostringstream s;
  to_key_values(c, true).write(s);
  text::Fnv1a h;
  const std::string body = s.str();
  h.add_bytes(body.data(), body.size());
  return h.value();
}

inline DirectedGraph load_experiment_graph(const ExperimentConfig& c) {
  if (!c.graph_path.empty()) {
    std::ifstream in(c.graph_path);
    if (!in) throw Error("cannot open graph file '" + c.graph_path + "'");
    return load_edge_list(in);
  }
  return scale_free_directed(c.synthetic_nodes, ScaleFreeParams{}, c.synthetic_seed);
}

// Wall-clock stages recorded for every row. Graph-level and (max_p, trial)-level
// stages are repeated on each row they feed.
inline std::vector<std::string> runtime_columns(const std::vector<ModelKind>& models) {
  std::vector<std::string> cols{"embed_s", "simulate_s", "actual_s", "label_s"};
  for (auto m : models) {
    cols.push_back("train_" + std::string(model_name(m)) + "_s");
    cols.push_back("predict_" + std::string(model_name(m)) + "_s");
  }
  return cols;
}

struct ResultRow {
  double max_p = 0.0;
  double portion = 0.0;
  std::size_t trial = 0;
  std::optional<double> bm_mae;
  std::vector<std::optional<double>> model_mae;  // aligned with ResultTable::models
  std::vector<double> runtimes;                  // aligned with runtime_columns; NaN when not run
  std::string error;                             // empty when every stage succeeded

  bool failed() const noexcept { return !error.empty(); }
};

struct ResultTable {
  std::vector<ModelKind> models;
  std::vector<ResultRow> rows;

  bool any_failed() const {
    return std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.failed(); });
  }
};

enum class TableFormat { tsv, markdown };

/// Header plus one line per row. MAE values carry 4 decimals, runtimes 3; a stage
/// that failed or did not run prints as NA.
inline std::string render_table(const ResultTable& rt, TableFormat format, bool include_runtimes = true) {
  std::vector<std::string> header{"max_p", "portion", "trial", "BM"};
  for (auto m : rt.models) {
    std::string name(model_name(m));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
    header.push_back(name);
  }
  const auto rcols = runtime_columns(rt.models);
  if (include_runtimes) header.insert(header.end(), rcols.begin(), rcols.end());

  auto value = [](const std::optional<double>& v, int decimals) { return v ? text::fixed(*v, decimals) : std::string("NA"); };
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rt.rows) {
    std::vector<std::string> cells{text::exact(r.max_p), text::exact(r.portion), std::to_string(r.trial), value(r.bm_mae, 4)};
    for (std::size_t k = 0; k < rt.models.size(); ++k)
      cells.push_back(value(k < r.model_mae.size() ? r.model_mae[k] : std::nullopt, 4));
    if (include_runtimes) {
      for (std::size_t k = 0; k < rcols.size(); ++k) {
        const double t = k < r.runtimes.size() ? r.runtimes[k] : std::nan("");
        cells.push_back(std::isnan(t) ? "NA" : text::fixed(t, 3));
      }
    }
    body.push_back(std::move(cells));
  }

  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    if (format == TableFormat::tsv) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "\t" : "") + cells[i];
    } else {
      out += "|";
      for (const auto& c : cells) out += " " + c + " |";
    }
    out += '\n';
  };
  emit(header);
  if (format == TableFormat::markdown) {
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += i < 3 ? " --- |" : " ---: |";
    out += '\n';
  }
  for (const auto& cells : body) emit(cells);
  return out;
}

/// Cells of a rendered table (either format), header first.
inline std::vector<std::vector<std::string>> parse_rendered_table(std::string_view rendered) {
  std::vector<std::vector<std::string>> rows;
  for (auto line : text::split(rendered, '\n')) {
    line = text::trim(line);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    if (line.front() == '|') {
      line = line.substr(1, line.size() - (line.back() == '|' ? 2 : 1));
      for (auto c : text::split(line, '|')) cells.emplace_back(text::trim(c));
      if (!cells.empty() && cells[0].find_first_not_of("-: ") == std::string::npos) continue;  // separator
    } else {
      for (auto c : text::split(line, '\t')) cells.emplace_back(text::trim(c));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

struct ExperimentHooks {
  // Progress messages, one per finished stage. May be called from several threads
  // when cells run in parallel; calls are serialized.
  std::function<void(const std::string&)> progress;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class Write>
void write_file(const std::filesystem::path& path, Write&& write) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write '" + tmp + "'");
    write(out);
    if (!out) throw Error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

// Seed tags of the independent substreams; each stage draws from
// derive_seed(master, tag, cell coordinates...).
enum SeedTag : std::uint64_t {
  kEmbedTag = 10,
  kProbTag,
  kCascadeTag,
  kSampleTag,
  kNestedTag,
  kDatasetTag,
  kModelTag,
};

struct CellResult {
  std::optional<double> bm;
  std::vector<std::optional<double>> models;
  std::vector<double> runtimes;
  std::string error;
};

inline void save_cell_result(const std::filesystem::path& path, const CellResult& r, std::uint64_t config_hash,
                             const std::vector<ModelKind>& models) {
  KeyValueFile kv;
  kv.set("config", std::to_string(config_hash));
  kv.set("bm_mae", r.bm ? text::exact(*r.bm) : "NA");
  for (std::size_t k = 0; k < models.size(); ++k)
    kv.set(std::string(model_name(models[k])) + "_mae", r.models[k] ? text::exact(*r.models[k]) : "NA");
  const auto cols = runtime_columns(models);
  for (std::size_t k = 0; k < cols.size(); ++k)
    kv.set(cols[k], std::isnan(r.runtimes[k]) ? "NA" : text::exact(r.runtimes[k]));
  kv.set("error", r.error);
  write_file(path, [&](std::ostream& out) { kv.write(out); });
}

// A previously finished, successful cell under the same configuration.
inline std::optional<CellResult> load_cell_result(const std::filesystem::path& path, std::uint64_t config_hash,
                                                  const std::vector<ModelKind>& models) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    auto kv = KeyValueFile::parse(in);
    if (kv.get("config") != std::to_string(config_hash) || !kv.get("error").value_or("x").empty()) return std::nullopt;
    auto num = [&](const std::string& key) -> std::optional<double> {
      auto v = kv.get(key);
      if (!v || *v == "NA") return std::nullopt;
      return text::parse_double(*v);
    };
    CellResult r;
    r.bm = num("bm_mae");
    if (!r.bm) return std::nullopt;
    for (auto m : models) {
      r.models.push_back(num(std::string(model_name(m)) + "_mae"));
      if (!r.models.back()) return std::nullopt;
    }
    for (const auto& col : runtime_columns(models)) r.runtimes.push_back(num(col).value_or(std::nan("")));
    return r;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Runs the grid on an already loaded graph. Rows are ordered by (max_p, trial,
/// portion) in configuration order. Stage failures are caught per cell and stored
/// in ResultRow::error; the remaining cells still run.
inline ResultTable run_experiment(const ExperimentConfig& cfg, const DirectedGraph& g, const ExperimentHooks& hooks = {}) {
  namespace fs = std::filesystem;
  using detail::Clock;
  cfg.validate();
  const bool persist = !cfg.output_dir.empty();
  const fs::path root = cfg.output_dir;
  const std::uint64_t config_hash = config_fingerprint(cfg);
  const auto rcols = runtime_columns(cfg.models);
  const std::size_t nmodels = cfg.models.size();
  const std::size_t nportions = cfg.portions.size();
  const auto labels = g.labels();

  std::mutex progress_mutex;
  auto say = [&](const std::string& msg) {
    if (!hooks.progress) return;
    std::lock_guard lock(progress_mutex);
    hooks.progress(msg);
  };
  auto group_dir = [&](std::size_t i, std::size_t t) {
    return root / ("maxp" + std::to_string(i) + "_trial" + std::to_string(t));
  };
  auto cell_dir = [&](std::size_t i, std::size_t t, std::size_t j) {
    return group_dir(i, t) / ("portion" + std::to_string(j));
  };

  if (persist) {
    fs::create_directories(root);
    detail::write_file(root / "config.txt", [&](std::ostream& out) { to_key_values(cfg).write(out); });
  }

  // Rows in output order, pre-filled from earlier runs where possible.
  const std::size_t groups = cfg.max_p.size() * cfg.trials;
  std::vector<detail::CellResult> cells(groups * nportions);
  std::vector<char> done(cells.size(), 0);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    for (std::size_t j = 0; j < nportions; ++j) {
      detail::CellResult& c = cells[gi * nportions + j];
      c.models.assign(nmodels, std::nullopt);
      c.runtimes.assign(rcols.size(), std::nan(""));
      if (!persist) continue;
      if (auto prev = detail::load_cell_result(cell_dir(gi / cfg.trials, gi % cfg.trials, j) / "result.txt", config_hash,
                                               cfg.models)) {
        c = std::move(*prev);
        done[gi * nportions + j] = 1;
      }
    }
  }
  const bool any_pending = std::find(done.begin(), done.end(), 0) != done.end();

  // Structure-only embeddings, shared by every cell.
  std::optional<EmbeddingMatrix> emb;
  std::string embed_error;
  double embed_seconds = std::nan("");
  if (any_pending && nmodels > 0) {
    const auto start = Clock::now();
    try {
      emb = embed_graph(g, cfg.walk, derive_seed(cfg.seed, detail::kEmbedTag), cfg.workers);
      embed_seconds = detail::seconds_since(start);
      if (persist) detail::write_file(root / "embeddings.txt", [&](std::ostream& out) { save_embeddings(out, *emb, labels); });
      say("embeddings: " + text::fixed(embed_seconds, 1) + " s");
    } catch (const std::exception& e) {
      embed_error = std::string("embed: ") + e.what();
      say(embed_error);
    }
  }

  parallel_for(groups, cfg.parallel_cells, [&](std::size_t gi) {
    const std::size_t i = gi / cfg.trials, t = gi % cfg.trials;
    bool pending = false;
    for (std::size_t j = 0; j < nportions; ++j) pending |= !done[gi * nportions + j];
    if (!pending) return;
    auto fail_pending = [&](const std::string& msg) {
      for (std::size_t j = 0; j < nportions; ++j) {
        if (!done[gi * nportions + j]) cells[gi * nportions + j].error = msg;
      }
    };

    CascadeSet full;
    ReachMatrix actual;
    double simulate_s = 0, actual_s = 0;
    try {
      auto start = Clock::now();
      const auto probs = assign_probabilities(g, cfg.max_p[i], derive_seed(cfg.seed, detail::kProbTag, i, t));
      full = generate_cascade_set(g, probs, cfg.r, derive_seed(cfg.seed, detail::kCascadeTag, i, t), cfg.workers);
      simulate_s = detail::seconds_since(start);
      start = Clock::now();
      actual = estimate_reach(full, DivisorMode::nominal_r, cfg.workers);
      actual_s = detail::seconds_since(start);
      if (persist) {
        detail::write_file(group_dir(i, t) / "cascades.txt", [&](std::ostream& out) { save_cascades(out, full, labels); });
        detail::write_file(group_dir(i, t) / "actual.tsv", [&](std::ostream& out) { save_reach(out, actual, labels, "actual"); });
      }
    } catch (const std::exception& e) {
      fail_pending(std::string("simulate: ") + e.what());
      say("max_p=" + text::exact(cfg.max_p[i]) + " trial=" + std::to_string(t) + " failed: " + e.what());
      return;
    }

    std::vector<CascadeSet> nested;
    if (cfg.nested_sampling) nested = sample_nested_portions(full, cfg.portions, derive_seed(cfg.seed, detail::kNestedTag, i, t));

    for (std::size_t j = 0; j < nportions; ++j) {
      if (done[gi * nportions + j]) continue;
      detail::CellResult& cell = cells[gi * nportions + j];
      const fs::path dir = cell_dir(i, t, j);
      cell.runtimes[0] = embed_seconds;
      cell.runtimes[1] = simulate_s;
      cell.runtimes[2] = actual_s;
      std::vector<std::string> errors;
      std::optional<ReachMatrix> label;
      try {
        const auto start = Clock::now();
        CascadeSet part = cfg.nested_sampling
                              ? std::move(nested[j])
                              : sample_portion(full, cfg.portions[j], derive_seed(cfg.seed, detail::kSampleTag, i, t, j));
        label = estimate_reach(part, DivisorMode::per_seed_count, cfg.workers);
        cell.runtimes[3] = detail::seconds_since(start);
        cell.bm = mae(*label, actual);
        if (persist) detail::write_file(dir / "labels.tsv", [&](std::ostream& out) { save_reach(out, *label, labels, "label"); });
      } catch (const std::exception& e) {
        errors.push_back(std::string("label: ") + e.what());
      }

      if (label && nmodels > 0) {
        std::optional<Dataset> ds;
        if (!emb) {
          errors.push_back(embed_error);
        } else {
          try {
            ds.emplace(build_dataset(*emb, *label, cfg.zero_keep_fraction, derive_seed(cfg.seed, detail::kDatasetTag, i, t, j)));
          } catch (const std::exception& e) {
            errors.push_back(std::string("featurize: ") + e.what());
          }
        }
        for (std::size_t k = 0; ds && k < nmodels; ++k) {
          const std::string name(model_name(cfg.models[k]));
          try {
            auto start = Clock::now();
            const std::uint64_t mseed = derive_seed(cfg.seed, detail::kModelTag, i, t, j, static_cast<std::uint64_t>(cfg.models[k]));
            Model model = [&]() -> Model {
              if (cfg.models[k] == ModelKind::mlp) {
                MlpConfig mc = cfg.mlp;
                mc.workers = cfg.workers;
                return train_mlp(*ds, mc, mseed).model;
              }
              GbrtConfig gc = cfg.gbrt;
              gc.workers = cfg.workers;
              return train_gbrt(*ds, gc, mseed).model;
            }();
            cell.runtimes[4 + 2 * k] = detail::seconds_since(start);
            if (persist) detail::write_file(dir / ("model_" + name + ".txt"), [&](std::ostream& out) { save_model(out, model); });
            start = Clock::now();
            const ReachMatrix predicted = predict_reach(model, *emb, cfg.workers);
            cell.models[k] = mae(predicted, actual);
            cell.runtimes[5 + 2 * k] = detail::seconds_since(start);
          } catch (const std::exception& e) {
            errors.push_back(name + ": " + e.what());
          }
        }
      }
      for (const auto& e : errors) cell.error += (cell.error.empty() ? "" : "; ") + e;
      if (persist) detail::save_cell_result(dir / "result.txt", cell, config_hash, cfg.models);
      std::string msg = "max_p=" + text::exact(cfg.max_p[i]) + " trial=" + std::to_string(t) +
                        " portion=" + text::exact(cfg.portions[j]) + " BM=" + (cell.bm ? text::fixed(*cell.bm, 4) : "NA");
      for (std::size_t k = 0; k < nmodels; ++k)
        msg += " " + std::string(model_name(cfg.models[k])) + "=" + (cell.models[k] ? text::fixed(*cell.models[k], 4) : "NA");
      if (!cell.error.empty()) msg += " error: " + cell.error;
      say(msg);
    }
  });

  ResultTable rt;
  rt.models = cfg.models;
  for (std::size_t gi = 0; gi < groups; ++gi) {
    for (std::size_t j = 0; j < nportions; ++j) {
      auto& c = cells[gi * nportions + j];
      rt.rows.push_back({cfg.max_p[gi / cfg.trials], cfg.portions[j], gi % cfg.trials, c.bm, std::move(c.models),
                         std::move(c.runtimes), std::move(c.error)});
    }
  }
  if (persist) {
    detail::write_file(root / "results.tsv", [&](std::ostream& out) { out << render_table(rt, TableFormat::tsv); });
    detail::write_file(root / "results.md", [&](std::ostream& out) { out << render_table(rt, TableFormat::markdown); });
  }
  return rt;
}

/// Loads (or generates) the configured graph, then runs the grid.
inline ResultTable run_experiment(const ExperimentConfig& cfg, const ExperimentHooks& hooks = {}) {
  cfg.validate();
  return run_experiment(cfg, load_experiment_graph(cfg), hooks);
}

}  // namespace reachcast
