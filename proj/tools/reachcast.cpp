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

// Command-line front end. Exit codes: 0 success, 1 stage or cell failure, 2 usage
// error.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reachcast.hpp"

namespace rc = reachcast;

namespace {

constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Bad flags or config values detected after parsing.
struct UsageError : rc::Error {
  using rc::Error::Error;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rc::Error("cannot open '" + path + "'");
  return in;
}

template <class Write>
void write_out(const std::string& path, Write&& write) {
  std::ofstream out(path);
  if (!out) throw rc::Error("cannot write '" + path + "'");
  write(out);
  out.flush();
  if (!out) throw rc::Error("write failed for '" + path + "'");
}

rc::DirectedGraph read_graph(const std::string& path) {
  auto in = open_in(path);
  rc::EdgeListStats stats;
  auto g = rc::load_edge_list(in, rc::DelimiterMode::automatic, &stats);
  if (stats.self_loops || stats.duplicates)
    std::cerr << "note: dropped " << stats.self_loops << " self-loops and " << stats.duplicates << " duplicate edges\n";
  return g;
}

rc::CascadeSet read_cascades(const std::string& path, const rc::DirectedGraph& g) {
  auto in = open_in(path);
  return rc::load_cascades(in, g);
}

rc::LoadedEmbeddings read_embeddings(const std::string& path) {
  auto in = open_in(path);
  return rc::load_embeddings(in);
}

rc::LoadedReach read_reach(const std::string& path) {
  auto in = open_in(path);
  return rc::load_reach(in);
}

struct GenerateArgs {
  std::size_t nodes = 1000;
  std::uint64_t seed = 7;
  std::string kind = "scale-free";
  std::size_t edges = 0;
  std::string out;
};

struct SimulateArgs {
  std::string graph, out;
  double max_p = 0.05;
  int r = 20;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct EstimateArgs {
  std::string cascades, graph, out, mode = "actual", divisor;
  unsigned workers = 1;
};

struct SampleArgs {
  std::string cascades, graph, out;
  double fraction = 0.1;
  std::uint64_t seed = 1;
};

struct EmbedArgs {
  std::string graph, out, mode = "deterministic";
  rc::WalkConfig cfg;
  std::uint64_t seed = 1;
};

struct FeaturizeArgs {
  std::string embeddings, labels, out;
  double zero_keep = 1.0;
  std::uint64_t seed = 1;
};

struct TrainArgs {
  std::string data, model, out;
  rc::MlpConfig mlp;
  rc::GbrtConfig gbrt;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct PredictArgs {
  std::string model, embeddings, pairs = "all", out;
  unsigned workers = 1;
};

struct EvaluateArgs {
  std::string predicted, actual;
};

struct ExperimentArgs {
  std::string config, output_dir, format = "tsv";
  unsigned workers = 0, parallel_cells = 0;
  bool no_runtimes = false;
};

int run_generate(const GenerateArgs& a) {
  rc::DirectedGraph g;
  if (a.kind == "scale-free") g = rc::scale_free_directed(a.nodes, rc::ScaleFreeParams{}, a.seed);
  else if (a.kind == "uniform") g = rc::random_directed(a.nodes, a.edges, a.seed);
  else throw UsageError("--kind must be scale-free or uniform");
  write_out(a.out, [&](std::ostream& o) { rc::save_edge_list(o, g); });
  std::cerr << g.node_count() << " nodes, " << g.edge_count() << " edges\n";
  return 0;
}

int run_simulate(const SimulateArgs& a) {
  auto g = read_graph(a.graph);
  auto probs = rc::assign_probabilities(g, a.max_p, rc::derive_seed(a.seed, 0));
  auto cs = rc::generate_cascade_set(g, probs, a.r, rc::derive_seed(a.seed, 1), a.workers);
  write_out(a.out, [&](std::ostream& o) { rc::save_cascades(o, cs, g.labels()); });
  return 0;
}

int run_estimate(const EstimateArgs& a) {
  if (a.mode != "actual" && a.mode != "label") throw UsageError("--mode must be actual or label");
  std::string divisor = a.divisor.empty() ? (a.mode == "actual" ? "nominal" : "perseed") : a.divisor;
  if (divisor != "nominal" && divisor != "perseed") throw UsageError("--divisor must be nominal or perseed");
  auto g = read_graph(a.graph);
  auto cs = read_cascades(a.cascades, g);
  auto m = rc::estimate_reach(cs, divisor == "nominal" ? rc::DivisorMode::nominal_r : rc::DivisorMode::per_seed_count,
                              a.workers);
  write_out(a.out, [&](std::ostream& o) { rc::save_reach(o, m, g.labels(), a.mode); });
  return 0;
}

int run_sample(const SampleArgs& a) {
  auto g = read_graph(a.graph);
  auto cs = read_cascades(a.cascades, g);
  auto part = rc::sample_portion(cs, a.fraction, a.seed);
  write_out(a.out, [&](std::ostream& o) { rc::save_cascades(o, part, g.labels()); });
  return 0;
}

int run_embed(EmbedArgs a) {
  if (a.mode == "fast") a.cfg.mode = rc::TrainingMode::fast;
  else if (a.mode != "deterministic") throw UsageError("--mode must be deterministic or fast");
  a.cfg.validate();
  auto g = read_graph(a.graph);
  auto emb = rc::embed_graph(g, a.cfg, a.seed, a.cfg.workers);
  write_out(a.out, [&](std::ostream& o) { rc::save_embeddings(o, emb, g.labels()); });
  return 0;
}

int run_featurize(const FeaturizeArgs& a) {
  auto emb = read_embeddings(a.embeddings);
  auto lab = read_reach(a.labels);
  auto labels = rc::align_reach(lab.matrix, lab.labels, emb.labels);
  auto ds = rc::build_dataset(emb.matrix, labels, a.zero_keep, a.seed);
  write_out(a.out, [&](std::ostream& o) { rc::save_dataset(o, ds, emb.labels); });
  std::cerr << ds.size() << " rows\n";
  return 0;
}

int run_train(TrainArgs a) {
  if (a.model != "mlp" && a.model != "gbrt") throw UsageError("--model must be mlp or gbrt");
  auto in = open_in(a.data);
  auto loaded = rc::load_dataset(in);
  if (a.model == "mlp") {
    a.mlp.workers = a.workers;
    auto res = rc::train_mlp(loaded.dataset, a.mlp, a.seed);
    std::cerr << "final loss " << res.final_loss << '\n';
    write_out(a.out, [&](std::ostream& o) { rc::save_model(o, res.model); });
  } else {
    a.gbrt.workers = a.workers;
    auto res = rc::train_gbrt(loaded.dataset, a.gbrt, a.seed);
    std::cerr << "final training MSE " << res.stage_losses.back() << '\n';
    write_out(a.out, [&](std::ostream& o) { rc::save_model(o, res.model); });
  }
  return 0;
}

int run_predict(const PredictArgs& a) {
  auto min = open_in(a.model);
  const rc::Model model = rc::load_model(min);
  auto emb = read_embeddings(a.embeddings);
  rc::ReachMatrix out;
  if (a.pairs == "all") {
    out = rc::predict_reach(model, emb.matrix, a.workers);
  } else {
    // Pairs file: one "src dst" label pair per line.
    std::unordered_map<std::string, rc::NodeId> index;
    for (rc::NodeId i = 0; i < emb.labels.size(); ++i) index.emplace(emb.labels[i], i);
    auto in = open_in(a.pairs);
    std::vector<rc::Edge> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto tok = rc::text::split_ws(line);
      if (tok.empty() || tok[0].front() == '#') continue;
      if (tok.size() != 2) throw rc::ParseError("expected 'src dst'", lineno);
      auto s = index.find(std::string(tok[0])), d = index.find(std::string(tok[1]));
      if (s == index.end() || d == index.end()) throw rc::ParseError("unknown node label", lineno);
      pairs.push_back({s->second, d->second});
    }
    std::sort(pairs.begin(), pairs.end(), [](auto x, auto y) { return std::pair{x.src, x.dst} < std::pair{y.src, y.dst}; });
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    if (rc::input_dim(model) != 2 * emb.matrix.dims())
      throw rc::DimensionError("model input dimension does not match embeddings");
    const auto p = rc::predict_pairs(model, emb.matrix, pairs);
    std::vector<std::vector<rc::ReachEntry>> rows(emb.labels.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) rows[pairs[k].src].push_back({pairs[k].dst, p[k]});
    out = rc::ReachMatrix(emb.labels.size());
    for (rc::NodeId u = 0; u < rows.size(); ++u) out.set_row(u, std::move(rows[u]));
  }
  write_out(a.out, [&](std::ostream& o) { rc::save_reach(o, out, emb.labels, "predicted"); });
  return 0;
}

int run_evaluate(const EvaluateArgs& a) {
  auto pred = read_reach(a.predicted);
  auto actual = read_reach(a.actual);
  auto aligned = rc::align_reach(pred.matrix, pred.labels, actual.labels);
  std::cout << rc::text::exact(rc::mae(aligned, actual.matrix)) << '\n';
  return 0;
}

int run_experiment_cmd(const ExperimentArgs& a) {
  rc::ExperimentConfig cfg;
  try {
    auto in = open_in(a.config);
    auto kv = rc::KeyValueFile::parse(in);
    if (!a.output_dir.empty()) kv.set("output_dir", a.output_dir);
    if (a.workers) kv.set("workers", std::to_string(a.workers));
    if (a.parallel_cells) kv.set("parallel_cells", std::to_string(a.parallel_cells));
    cfg = rc::experiment_config_from(kv);
  } catch (const rc::ParameterError& e) {
    throw UsageError(e.what());
  } catch (const rc::ParseError& e) {
    throw UsageError(std::string(e.what()) + " (line " + std::to_string(e.line()) + ")");
  }
  if (a.format != "tsv" && a.format != "markdown") throw UsageError("--format must be tsv or markdown");
  rc::ExperimentHooks hooks;
  hooks.progress = [](const std::string& msg) { std::cerr << msg << std::endl; };
  const auto table = rc::run_experiment(cfg, hooks);
  std::cout << rc::render_table(table, a.format == "tsv" ? rc::TableFormat::tsv : rc::TableFormat::markdown,
                                !a.no_runtimes);
  if (table.any_failed()) {
    for (const auto& r : table.rows) {
      if (r.failed())
        std::cerr << "cell max_p=" << r.max_p << " portion=" << r.portion << " trial=" << r.trial << " failed: " << r.error
                  << '\n';
    }
    return kFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence reach estimation from cascades and node embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "reachcast 0.1.0");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate-graph", "Write a synthetic directed graph as an edge list");
  c_gen->add_option("--nodes", gen.nodes, "Node count")->capture_default_str();
  c_gen->add_option("--kind", gen.kind, "scale-free or uniform")->capture_default_str();
  c_gen->add_option("--edges", gen.edges, "Edge count (uniform only)");
  c_gen->add_option("--seed", gen.seed)->capture_default_str();
  c_gen->add_option("--out", gen.out)->required();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Draw activation probabilities and r cascades per node");
  c_sim->add_option("--graph", sim.graph)->required();
  c_sim->add_option("--max-p", sim.max_p, "Probabilities drawn uniformly from [0, max_p)")->capture_default_str();
  c_sim->add_option("--r", sim.r, "Cascades per seed node")->capture_default_str();
  c_sim->add_option("--seed", sim.seed)->capture_default_str();
  c_sim->add_option("--workers", sim.workers)->capture_default_str();
  c_sim->add_option("--out", sim.out)->required();

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Estimate a reach matrix from cascades");
  c_est->add_option("--cascades", est.cascades)->required();
  c_est->add_option("--graph", est.graph, "Graph the cascades were simulated on")->required();
  c_est->add_option("--mode", est.mode, "actual or label")->capture_default_str();
  c_est->add_option("--divisor", est.divisor, "nominal or perseed (default: nominal for actual, perseed for label)");
  c_est->add_option("--workers", est.workers)->capture_default_str();
  c_est->add_option("--out", est.out)->required();

  SampleArgs smp;
  auto* c_smp = app.add_subcommand("sample", "Keep a uniform random fraction of a cascade set");
  c_smp->add_option("--cascades", smp.cascades)->required();
  c_smp->add_option("--graph", smp.graph)->required();
  c_smp->add_option("--fraction", smp.fraction)->capture_default_str();
  c_smp->add_option("--seed", smp.seed)->capture_default_str();
  c_smp->add_option("--out", smp.out)->required();

  EmbedArgs emb;
  auto* c_emb = app.add_subcommand("embed", "Learn node embeddings from biased random walks");
  c_emb->add_option("--graph", emb.graph)->required();
  c_emb->add_option("--dims", emb.cfg.dimensions)->capture_default_str();
  c_emb->add_option("--walk-length", emb.cfg.walk_length)->capture_default_str();
  c_emb->add_option("--window", emb.cfg.window)->capture_default_str();
  c_emb->add_option("--walks-per-node", emb.cfg.walks_per_node)->capture_default_str();
  c_emb->add_option("--p", emb.cfg.return_param, "Return parameter")->capture_default_str();
  c_emb->add_option("--q", emb.cfg.inout_param, "In-out parameter")->capture_default_str();
  c_emb->add_option("--epochs", emb.cfg.epochs)->capture_default_str();
  c_emb->add_option("--learning-rate", emb.cfg.initial_learning_rate)->capture_default_str();
  c_emb->add_option("--negatives", emb.cfg.negatives_per_positive)->capture_default_str();
  c_emb->add_option("--mode", emb.mode, "deterministic or fast")->capture_default_str();
  c_emb->add_option("--workers", emb.cfg.workers)->capture_default_str();
  c_emb->add_option("--seed", emb.seed)->capture_default_str();
  c_emb->add_option("--out", emb.out)->required();

  FeaturizeArgs fea;
  auto* c_fea = app.add_subcommand("featurize", "Build a labelled link dataset");
  c_fea->add_option("--embeddings", fea.embeddings)->required();
  c_fea->add_option("--labels", fea.labels, "Reach matrix used as labels")->required();
  c_fea->add_option("--zero-keep", fea.zero_keep, "Fraction of zero-label pairs kept")->capture_default_str();
  c_fea->add_option("--seed", fea.seed)->capture_default_str();
  c_fea->add_option("--out", fea.out)->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Fit a regressor on a link dataset");
  c_tr->add_option("--data", tr.data)->required();
  c_tr->add_option("--model", tr.model, "mlp or gbrt")->required();
  c_tr->add_option("--hidden", tr.mlp.hidden, "MLP hidden layer sizes")->capture_default_str()->delimiter(',');
  c_tr->add_option("--epochs", tr.mlp.epochs, "MLP epochs")->capture_default_str();
  c_tr->add_option("--batch-size", tr.mlp.batch_size, "MLP mini-batch size")->capture_default_str();
  c_tr->add_option("--learning-rate", tr.mlp.learning_rate, "MLP Adam step size")->capture_default_str();
  c_tr->add_option("--l2", tr.mlp.l2, "MLP weight penalty")->capture_default_str();
  c_tr->add_option("--trees", tr.gbrt.trees, "GBRT stages")->capture_default_str();
  c_tr->add_option("--max-depth", tr.gbrt.max_depth, "GBRT tree depth")->capture_default_str();
  c_tr->add_option("--shrinkage", tr.gbrt.shrinkage, "GBRT learning rate")->capture_default_str();
  c_tr->add_option("--subsample", tr.gbrt.subsample, "GBRT row fraction per stage")->capture_default_str();
  c_tr->add_option("--thresholds", tr.gbrt.candidate_thresholds, "GBRT candidate thresholds per feature")
      ->capture_default_str();
  c_tr->add_option("--workers", tr.workers)->capture_default_str();
  c_tr->add_option("--seed", tr.seed)->capture_default_str();
  c_tr->add_option("--out", tr.out)->required();

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "Predict reach for node pairs");
  c_pr->add_option("--model", pr.model)->required();
  c_pr->add_option("--embeddings", pr.embeddings)->required();
  c_pr->add_option("--pairs", pr.pairs, "'all' or a file of 'src dst' lines")->capture_default_str();
  c_pr->add_option("--workers", pr.workers)->capture_default_str();
  c_pr->add_option("--out", pr.out)->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Print the off-diagonal MAE between two reach matrices");
  c_ev->add_option("--predicted", ev.predicted)->required();
  c_ev->add_option("--actual", ev.actual)->required();

  ExperimentArgs ex;
  auto* c_ex = app.add_subcommand("experiment", "Run the full evaluation grid");
  c_ex->add_option("--config", ex.config, "Flat key = value file")->required();
  c_ex->add_option("--out-dir", ex.output_dir, "Overrides output_dir");
  c_ex->add_option("--workers", ex.workers, "Overrides workers");
  c_ex->add_option("--parallel-cells", ex.parallel_cells, "Overrides parallel_cells");
  c_ex->add_option("--format", ex.format, "tsv or markdown")->capture_default_str();
  c_ex->add_flag("--no-runtimes", ex.no_runtimes, "Omit runtime columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*c_gen) return run_generate(gen);
    if (*c_sim) return run_simulate(sim);
    if (*c_est) return run_estimate(est);
    if (*c_smp) return run_sample(smp);
    if (*c_emb) return run_embed(emb);
    if (*c_fea) return run_featurize(fea);
    if (*c_tr) return run_train(tr);
    if (*c_pr) return run_predict(pr);
    if (*c_ev) return run_evaluate(ev);
    if (*c_ex) return run_experiment_cmd(ex);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const rc::ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const rc::ParseError& e) {
    std::cerr << "error: " << e.what() << " (line " << e.line() << ")\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
