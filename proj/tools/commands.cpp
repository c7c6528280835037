#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "admp/accuracy.hpp"
#include "admp/binary_io.hpp"
#include "admp/centrality.hpp"
#include "admp/dataset.hpp"
#include "admp/errors.hpp"
#include "admp/model.hpp"
#include "admp/policy.hpp"
#include "admp/synthetic.hpp"
#include "admp/train.hpp"
#include "table.hpp"

namespace fs = std::filesystem;

namespace admp::cli {
namespace {

struct SeedFlags {
  std::uint64_t seed = 0;
  std::size_t count = 1;
  std::vector<std::uint64_t> list;

  void attach(CLI::App* app) {
    app->add_option("--seed", seed, "First seed");
    app->add_option("--seeds", count, "Number of consecutive seeds starting at --seed")->check(CLI::PositiveNumber);
    app->add_option("--seed-list", list, "Explicit comma-separated seeds (overrides --seed/--seeds)")->delimiter(',');
  }

  std::vector<std::uint64_t> resolve() const {
    if (!list.empty()) return list;
    std::vector<std::uint64_t> out(count);
    std::iota(out.begin(), out.end(), seed);
    return out;
  }
};

struct TrainFlags {
  std::string paradigm = "st";
  std::string flavor = "gcn";
  std::size_t layers = 5;
  std::size_t hidden = 0;
  double lr = 0.0;
  double dropout = 0.0;
  std::size_t epochs = 200;
  std::size_t patience = 50;
  double weight_decay = 0.0;
  CLI::Option* hidden_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* dropout_opt = nullptr;

  void attach(CLI::App* app, bool with_paradigm) {
    if (with_paradigm) app->add_option("--paradigm", paradigm, "alm, st or single");
    app->add_option("--flavor", flavor, "gcn or gin");
    hidden_opt = app->add_option("--hidden", hidden, "Hidden width (default: dataset preset or 64)");
    lr_opt = app->add_option("--lr", lr, "Learning rate (default: dataset preset or 0.01)");
    dropout_opt = app->add_option("--dropout", dropout, "Dropout probability (default: dataset preset or 0.5)");
    app->add_option("--epochs", epochs, "Epoch budget (per stage for st)");
    app->add_option("--patience", patience, "Early-stopping patience");
    app->add_option("--weight-decay", weight_decay, "L2 penalty added to the gradient");
  }

  TrainConfig config(const std::string& dataset_name) const {
    TrainConfig cfg = preset_config(dataset_name);
    cfg.paradigm = parse_paradigm(paradigm);
    if (hidden_opt->count()) cfg.hidden = hidden;
    if (lr_opt->count()) cfg.lr = lr;
    if (dropout_opt->count()) cfg.dropout = dropout;
    cfg.epochs = epochs;
    cfg.patience = patience;
    cfg.weight_decay = weight_decay;
    if (cfg.hidden == 0) throw std::invalid_argument("--hidden must be positive");
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("--lr must be positive");
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw std::invalid_argument("--dropout must lie in [0, 1)");
    if (cfg.epochs == 0) throw std::invalid_argument("--epochs must be at least 1");
    return cfg;
  }
};

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ADMP_OUTPUT_DIR"); env && *env) return env;
  return "admp_out";
}

// A directory path, or a name looked up under $ADMP_DATA_DIR.
Dataset open_dataset(const std::string& spec) {
  fs::path p(spec);
  if (!fs::is_directory(p))
    if (const char* root = std::getenv("ADMP_DATA_DIR"); root && fs::is_directory(fs::path(root) / spec))
      p = fs::path(root) / spec;
  return load_dataset(p);
}

std::string pct(double fraction) { return format("%.2f", 100.0 * fraction); }
std::string pct_ms(const MeanStd& m) { return format("%.2f ± %.2f", 100.0 * m.mean, 100.0 * m.std); }
std::string frac(double v) { return format("%.6f", v); }

PredictionCube cube_for(const AdmpParams& params, const Graph& g) {
  const NormAdjacency adj = normalize(g, adjacency_for(params.shape.flavor));
  return PredictionCube{forward(params, g, adj, ad::Mode::Eval, 0.0, 0).probs};
}

void check_compatible(const AdmpParams& params, const Graph& g, const std::string& what) {
  if (params.shape.in_dim != g.num_features() || params.shape.classes != g.num_classes())
    throw DataError(what + ": checkpoint expects " + std::to_string(params.shape.in_dim) + " features and " +
                    std::to_string(params.shape.classes) + " classes, dataset has " +
                    std::to_string(g.num_features()) + " and " + std::to_string(g.num_classes()));
}

std::string ledger_csv(const StageLedger& ledger) {
  Table t{{"stage", "epochs_run", "best_epoch", "final_train_loss", "best_val_accuracy", "trained"}, {}};
  for (const auto& s : ledger.stages) {
    double best = 0.0;
    for (double v : s.best_val_accuracy) best = std::max(best, v);
    std::string names;
    for (const auto& n : s.trained) names += (names.empty() ? "" : " ") + n;
    t.rows.push_back({std::to_string(s.stage), std::to_string(s.epochs_run), std::to_string(s.best_epoch),
                      format("%.17g", s.final_train_loss), frac(best), names});
  }
  return t.csv();
}

std::string epochs_csv(const std::vector<EpochMetric>& metrics) {
  Table t{{"stage", "epoch", "layer", "split", "accuracy", "train_loss"}, {}};
  for (const auto& m : metrics)
    t.rows.push_back({std::to_string(m.stage), std::to_string(m.epoch), std::to_string(m.layer),
                      std::string(split_name(m.split)), frac(m.accuracy), format("%.17g", m.loss)});
  return t.csv();
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string dataset, out;
  TrainFlags train;
  SeedFlags seeds;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Dataset ds = open_dataset(a.dataset);
  const Graph& g = ds.graph;
  TrainConfig cfg = a.train.config(ds.manifest.name);
  const Flavor flavor = parse_flavor(a.train.flavor);
  const NormAdjacency adj = normalize(g, adjacency_for(flavor));
  const fs::path dir = output_dir(a.out);
  fs::create_directories(dir);

  const std::size_t L = a.train.layers;
  std::vector<std::vector<double>> test(L + 1), val(L + 1);
  Table runs{{"seed", "layer", "train", "val", "test"}, {}};
  for (std::uint64_t seed : a.seeds.resolve()) {
    cfg.seed = seed;
    AdmpParams params = AdmpParams::init({flavor, L, g.num_features(), cfg.hidden, g.num_classes()}, seed);
    const TrainResult result = train(params, g, adj, cfg);
    const fs::path ckpt = dir / ("ckpt_seed" + std::to_string(seed));
    save_checkpoint(params, ckpt);
    io::write_text(ckpt / "ledger.csv", ledger_csv(result.ledger));
    io::write_text(ckpt / "epochs.csv", epochs_csv(result.metrics));

    const PredictionCube cube = cube_for(params, g);
    const auto tr = per_layer_accuracy(cube, g.labels(), g.mask(Split::Train));
    const auto va = per_layer_accuracy(cube, g.labels(), g.mask(Split::Val));
    const auto te = per_layer_accuracy(cube, g.labels(), g.mask(Split::Test));
    for (std::size_t l = 0; l <= L; ++l) {
      val[l].push_back(va[l]);
      test[l].push_back(te[l]);
      runs.rows.push_back({std::to_string(seed), std::to_string(l), frac(tr[l]), frac(va[l]), frac(te[l])});
    }
  }

  Table csv{{"layer", "val_mean", "test_mean", "test_std"}, {}};
  Table text{{"layer", "val acc (%)", "test acc (%)"}, {}};
  for (std::size_t l = 0; l <= L; ++l) {
    const MeanStd v = mean_std(val[l]), t = mean_std(test[l]);
    csv.rows.push_back({std::to_string(l), frac(v.mean), frac(t.mean), frac(t.std)});
    text.rows.push_back({std::to_string(l), pct(v.mean), pct_ms(t)});
  }
  io::write_text(dir / "train_layers.csv", csv.csv());
  io::write_text(dir / "train_runs.csv", runs.csv());
  out << "ADMP-" << (flavor == Flavor::Gcn ? "GCN" : "GIN") << " " << paradigm_name(cfg.paradigm) << " on "
      << ds.manifest.name << " (hidden " << cfg.hidden << ", lr " << cfg.lr << ", dropout " << cfg.dropout << ", "
      << a.seeds.resolve().size() << " seeds)\n"
      << text.text() << "(" << (dir / "train_layers.csv").string() << ")\n";
  return kOk;
}

// ---- evaluate ----------------------------------------------------------------

struct EvalArgs {
  std::string dataset, out;
  std::vector<std::string> checkpoints;
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out) {
  const Dataset ds = open_dataset(a.dataset);
  const Graph& g = ds.graph;
  std::vector<std::vector<double>> test;
  std::vector<double> oracle;
  for (const auto& c : a.checkpoints) {
    const AdmpParams params = load_checkpoint(c);
    check_compatible(params, g, c);
    const PredictionCube cube = cube_for(params, g);
    const auto te = per_layer_accuracy(cube, g.labels(), g.mask(Split::Test));
    if (!test.empty() && te.size() != test.size()) throw DataError(c + ": checkpoints disagree on depth");
    test.resize(te.size());
    for (std::size_t l = 0; l < te.size(); ++l) test[l].push_back(te[l]);
    oracle.push_back(oracle_accuracy(cube, g.labels(), g.mask(Split::Test)));
  }
  Table t{{"layer", "test_mean", "test_std"}, {}};
  Table text{{"layer", "test acc (%)"}, {}};
  for (std::size_t l = 0; l < test.size(); ++l) {
    const MeanStd m = mean_std(test[l]);
    t.rows.push_back({std::to_string(l), frac(m.mean), frac(m.std)});
    text.rows.push_back({std::to_string(l), pct_ms(m)});
  }
  const MeanStd o = mean_std(oracle);
  t.rows.push_back({"oracle", frac(o.mean), frac(o.std)});
  text.rows.push_back({"oracle", pct_ms(o)});
  const fs::path dir = output_dir(a.out);
  fs::create_directories(dir);
  io::write_text(dir / "evaluate.csv", t.csv());
  out << text.text() << "(" << (dir / "evaluate.csv").string() << ")\n";
  return kOk;
}

// ---- policy ------------------------------------------------------------------

struct PolicyArgs {
  std::string dataset, out;
  std::vector<std::string> checkpoints;
  std::string metric = "kcore";
  std::size_t clusters = 5;
  std::vector<std::size_t> grid;
};

int cmd_policy(const PolicyArgs& a, std::ostream& out) {
  const Dataset ds = open_dataset(a.dataset);
  const Graph& g = ds.graph;
  std::vector<Metric> metrics;
  if (a.metric == "all")
    metrics.assign(std::begin(kAllMetrics), std::end(kAllMetrics));
  else
    metrics.push_back(parse_metric(a.metric));
  const std::vector<std::size_t> grid = a.grid.empty() ? std::vector<std::size_t>{a.clusters} : a.grid;

  std::vector<AdmpParams> models;
  for (const auto& c : a.checkpoints) {
    models.push_back(load_checkpoint(c));
    check_compatible(models.back(), g, c);
  }
  std::vector<PredictionCube> cubes;
  for (const auto& m : models) cubes.push_back(cube_for(m, g));

  const fs::path dir = output_dir(a.out);
  fs::create_directories(dir);
  Table csv{{"method", "clusters", "test_mean", "test_std"}, {}};
  Table text{{"method", "C", "test acc (%)"}, {}};
  for (Metric metric : metrics) {
    const CentralityVector cv = compute_centrality(metric, g);
    std::vector<double> acc;
    std::string chosen;
    for (std::size_t i = 0; i < models.size(); ++i) {
      const ExitPolicy pol = tune_policy(cubes[i], g.labels(), g.mask(Split::Val), cv, grid);
      const PolicyEvaluation ev = apply_policy(cubes[i], pol, g.mask(Split::Test), g.labels());
      acc.push_back(ev.accuracy);
      chosen += (chosen.empty() ? "" : " ") + std::to_string(pol.assignment.n_buckets);
      const std::string tag = std::string(metric_name(metric)) + "_seed" + std::to_string(models[i].seed);
      save_policy(pol, dir / ("policy_" + tag + ".txt"));
      io::write_text(dir / ("trace_" + tag + ".csv"), exit_trace_csv(ev.trace));
    }
    const MeanStd m = mean_std(acc);
    csv.rows.push_back({std::string(metric_name(metric)), chosen, frac(m.mean), frac(m.std)});
    text.rows.push_back({std::string(metric_name(metric)), chosen, pct_ms(m)});
  }
  std::vector<double> oracle;
  for (const auto& cube : cubes) oracle.push_back(oracle_accuracy(cube, g.labels(), g.mask(Split::Test)));
  const MeanStd o = mean_std(oracle);
  csv.rows.push_back({"oracle", "-", frac(o.mean), frac(o.std)});
  text.rows.push_back({"oracle", "-", pct_ms(o)});
  io::write_text(dir / "policy.csv", csv.csv());
  out << text.text() << "(" << (dir / "policy.csv").string() << ")\n";
  return kOk;
}

// ---- centrality --------------------------------------------------------------

struct CentralityArgs {
  std::string dataset, out;
  std::string metric = "all";
};

int cmd_centrality(const CentralityArgs& a, std::ostream& out) {
  const Dataset ds = open_dataset(a.dataset);
  std::vector<CentralityVector> cols;
  if (a.metric == "all")
    for (Metric m : kAllMetrics) cols.push_back(compute_centrality(m, ds.graph));
  else
    cols.push_back(compute_centrality(parse_metric(a.metric), ds.graph));

  Table t{{"node"}, {}};
  for (const auto& c : cols) t.header.emplace_back(metric_name(c.metric));
  for (std::size_t v = 0; v < ds.graph.num_nodes(); ++v) {
    std::vector<std::string> row{std::to_string(v)};
    for (const auto& c : cols) row.push_back(format("%.17g", c.values[v]));
    t.rows.push_back(std::move(row));
  }
  const fs::path dir = output_dir(a.out);
  fs::create_directories(dir);
  io::write_text(dir / "centrality.csv", t.csv());

  Table summary{{"metric", "min", "max", "sum"}, {}};
  for (const auto& c : cols) {
    const auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
    const double sum = std::accumulate(c.values.begin(), c.values.end(), 0.0);
    summary.rows.push_back({std::string(metric_name(c.metric)), format("%.6g", *lo), format("%.6g", *hi),
                            format("%.6g", sum)});
  }
  out << summary.text() << "(" << (dir / "centrality.csv").string() << ")\n";
  return kOk;
}

// ---- synth / sweep -----------------------------------------------------------

struct SynthFlags {
  std::string source = "planted";
  std::size_t n = 5000;
  std::size_t block = 0;
  double threshold = 0.0;
  CLI::Option* threshold_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--source", source, "'planted' or a dataset directory to carve regions from");
    app->add_option("--n", n, "Total nodes (half per region)")->check(CLI::PositiveNumber);
    app->add_option("--block-size", block, "Nodes per planted block (default 0.6 n)");
    threshold_opt = app->add_option("--threshold", threshold, "Core number separating dense from sparse");
  }

  SyntheticGraph build(std::uint64_t seed) const {
    Graph src;
    if (source == "planted") {
      PlantedSpec ps;
      ps.nodes_per_block = block ? block : (n * 3 + 4) / 5;
      ps.seed = seed;
      src = make_planted_source(ps);
    } else {
      src = open_dataset(source).graph;
    }
    SyntheticSpec spec;
    spec.total_nodes = n;
    spec.seed = seed;
    if (threshold_opt->count()) spec.core_threshold = threshold;
    return build_synthetic(src, spec);
  }
};

struct SynthArgs {
  SynthFlags synth;
  std::string out, name = "synthetic";
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const SyntheticGraph s = a.synth.build(a.seed);
  const fs::path dir = output_dir(a.out);
  const DatasetManifest m =
      save_dataset(s.graph, dir, a.name, s.region,
                   {{"source", a.synth.source}, {"seed", std::to_string(a.seed)},
                    {"core_threshold", format("%.17g", s.threshold)}});
  std::size_t edges[2] = {0, 0}, nodes[2] = {0, 0};
  for (std::size_t v = 0; v < s.graph.num_nodes(); ++v) ++nodes[s.region[v]];
  for (const auto& [u, v] : s.graph.edge_list()) ++edges[s.region[u]];
  Table t{{"region", "nodes", "edges", "mean degree"}, {}};
  const char* names[2] = {"sparse", "dense"};
  for (int r = 0; r < 2; ++r)
    t.rows.push_back({names[r], std::to_string(nodes[r]), std::to_string(edges[r]),
                      format("%.2f", 2.0 * static_cast<double>(edges[r]) / static_cast<double>(nodes[r]))});
  out << "synthetic graph: " << m.n_nodes << " nodes, " << m.n_edges << " edges, " << m.n_classes
      << " classes, core threshold " << s.threshold << "\n"
      << t.text() << "(" << dir.string() << ")\n";
  return kOk;
}

struct SweepArgs {
  std::string dataset, out, split = "test";
  SynthFlags synth;
  TrainFlags train;
  SeedFlags seeds;
  std::size_t max_depth = 10;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  Graph g;
  std::vector<std::uint8_t> region;
  std::string name = "synthetic";
  if (!a.dataset.empty()) {
    Dataset ds = open_dataset(a.dataset);
    if (ds.regions.empty()) throw DataError(a.dataset + ": dataset has no region labels (regions.bin)");
    g = std::move(ds.graph);
    region = std::move(ds.regions);
    name = ds.manifest.name;
  } else {
    SyntheticGraph s = a.synth.build(a.seeds.resolve().front());
    g = std::move(s.graph);
    region = std::move(s.region);
  }
  std::vector<SweepRegion> regions{{"sparse", {}}, {"dense", {}}};
  for (std::uint8_t r = 0; r < 2; ++r)
    for (auto x : region) regions[r].mask.push_back(x == r);
  Split split;
  if (a.split == "test") split = Split::Test;
  else if (a.split == "val") split = Split::Val;
  else if (a.split == "train") split = Split::Train;
  else throw std::invalid_argument("--split must be train, val or test");

  TrainConfig cfg = a.train.config(name);
  const auto seeds = a.seeds.resolve();
  const auto rows = depth_sweep(g, regions, a.max_depth, parse_flavor(a.train.flavor), cfg, seeds, split);

  const fs::path dir = output_dir(a.out);
  fs::create_directories(dir);
  io::write_text(dir / "sweep.csv", sweep_csv(rows));
  Table t{{"depth", "sparse (%)", "dense (%)"}, {}};
  for (std::size_t i = 0; i + 1 < rows.size(); i += 2)
    t.rows.push_back({std::to_string(rows[i].depth), pct(rows[i].accuracy), pct(rows[i + 1].accuracy)});
  out << "depth sweep, " << split_name(split) << " accuracy per region\n"
      << t.text() << "(" << (dir / "sweep.csv").string() << ")\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-exit GNN node classification with per-node exit policies"};
  app.name("admp");
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train one model per seed and report per-exit accuracy");
  train_cmd->add_option("--dataset", train_args.dataset, "Dataset directory or name under $ADMP_DATA_DIR")->required();
  train_cmd->add_option("--layers", train_args.train.layers, "Maximum depth L (exits 0..L)");
  train_cmd->add_option("--out", train_args.out, "Output directory (default $ADMP_OUTPUT_DIR or ./admp_out)");
  train_args.train.attach(train_cmd, true);
  train_args.seeds.attach(train_cmd);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Per-exit and oracle test accuracy of checkpoints");
  eval_cmd->add_option("--dataset", eval_args.dataset, "Dataset")->required();
  eval_cmd->add_option("--checkpoint", eval_args.checkpoints, "Checkpoint directory (repeatable)")->required();
  eval_cmd->add_option("--out", eval_args.out, "Output directory");

  PolicyArgs policy_args;
  auto* policy_cmd = app.add_subcommand("policy", "Learn centrality exit policies on validation, apply to test");
  policy_cmd->add_option("--dataset", policy_args.dataset, "Dataset")->required();
  policy_cmd->add_option("--checkpoint", policy_args.checkpoints, "Checkpoint directory (repeatable)")->required();
  policy_cmd->add_option("--metric", policy_args.metric, "degree, kcore, pagerank, walk or all");
  policy_cmd->add_option("--clusters", policy_args.clusters, "Number of centrality buckets C")
      ->check(CLI::PositiveNumber);
  policy_cmd->add_option("--clusters-grid", policy_args.grid, "Candidate C values, chosen on validation")
      ->delimiter(',');
  policy_cmd->add_option("--out", policy_args.out, "Output directory");

  CentralityArgs cent_args;
  auto* cent_cmd = app.add_subcommand("centrality", "Export node centralities as CSV");
  cent_cmd->add_option("--dataset", cent_args.dataset, "Dataset")->required();
  cent_cmd->add_option("--metric", cent_args.metric, "degree, kcore, pagerank, walk or all");
  cent_cmd->add_option("--out", cent_args.out, "Output directory");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Build a merged dense/sparse synthetic dataset");
  synth_args.synth.attach(synth_cmd);
  synth_cmd->add_option("--seed", synth_args.seed, "Seed");
  synth_cmd->add_option("--name", synth_args.name, "Dataset name written to the manifest");
  synth_cmd->add_option("--out", synth_args.out, "Output dataset directory");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train depths 0..max on a two-region graph, score each region");
  sweep_cmd->add_option("--dataset", sweep_args.dataset, "Dataset with regions.bin (default: build one)");
  sweep_cmd->add_option("--max-depth", sweep_args.max_depth, "Deepest model");
  sweep_cmd->add_option("--split", sweep_args.split, "Split scored per region");
  sweep_cmd->add_option("--out", sweep_args.out, "Output directory");
  sweep_args.synth.attach(sweep_cmd);
  sweep_args.train.attach(sweep_cmd, false);
  sweep_args.seeds.attach(sweep_cmd);
  sweep_args.train.paradigm = "single";

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args, out);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args, out);
    if (policy_cmd->parsed()) return cmd_policy(policy_args, out);
    if (cent_cmd->parsed()) return cmd_centrality(cent_args, out);
    if (synth_cmd->parsed()) return cmd_synth(synth_args, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_args, out);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::out_of_range& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace admp::cli
