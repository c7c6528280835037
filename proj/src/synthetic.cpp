#include "admp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "admp/accuracy.hpp"
#include "admp/centrality.hpp"
#include "admp/errors.hpp"
#include "admp/rng.hpp"

namespace admp {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::vector<bool> SyntheticGraph::region_mask(std::uint8_t r) const {
  std::vector<bool> m(region.size());
  for (std::size_t i = 0; i < region.size(); ++i) m[i] = region[i] == r;
  return m;
}

namespace {

template <typename T>
void shuffle(std::vector<T>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[rng.below(i)]);
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[xs.size() / 2];
}

}  // namespace

SyntheticGraph build_synthetic(const Graph& source, const SyntheticSpec& spec) {
  if (spec.total_nodes < 2 || spec.total_nodes % 2 != 0)
    throw std::invalid_argument("build_synthetic: total_nodes must be a positive even count");
  if (source.num_nodes() == 0) throw DataError("build_synthetic: empty source graph");
  const std::size_t half = spec.total_nodes / 2;
  const auto cores = kcore(source).values;
  const double threshold = spec.core_threshold.value_or(median(cores));

  // Per-label pools, node ids ascending.
  const std::size_t c = source.num_classes();
  std::vector<std::vector<NodeId>> dense(c), sparse(c);
  for (NodeId v = 0; v < source.num_nodes(); ++v)
    (cores[v] >= threshold ? dense : sparse)[static_cast<std::size_t>(source.labels()[v])].push_back(v);
  std::size_t n_dense = 0, n_sparse = 0;
  for (std::size_t y = 0; y < c; ++y) {
    n_dense += dense[y].size();
    n_sparse += sparse[y].size();
  }
  if (n_dense < half || n_sparse < half)
    throw DataError("build_synthetic: threshold " + std::to_string(threshold) + " leaves " + std::to_string(n_sparse) +
                    " sparse and " + std::to_string(n_dense) + " dense nodes, need " + std::to_string(half) +
                    " in each");

  // Largest k such that the k best-represented labels each appear floor(half / k) times in both pools.
  std::vector<std::pair<std::size_t, int>> avail;
  for (std::size_t y = 0; y < c; ++y)
    avail.emplace_back(std::min(dense[y].size(), sparse[y].size()), static_cast<int>(y));
  std::stable_sort(avail.begin(), avail.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::size_t best_k = 0;
  for (std::size_t k = 1; k <= c; ++k)
    if (avail[k - 1].first > 0 && avail[k - 1].first >= half / k) best_k = k;
  std::vector<int> kept;
  for (std::size_t i = 0; i < best_k; ++i) kept.push_back(avail[i].second);
  std::sort(kept.begin(), kept.end());
  if (kept.empty()) throw DataError("build_synthetic: no label is sufficiently present in both regions");

  // Equal per-label quotas; the remainder goes to the first labels with spare capacity in both pools.
  const std::size_t k = kept.size();
  std::vector<std::size_t> quota(k, half / k);
  std::size_t rest = half - (half / k) * k;
  for (std::size_t i = 0; i < k && rest > 0; ++i) {
    if (dense[kept[i]].size() > quota[i] && sparse[kept[i]].size() > quota[i]) {
      ++quota[i];
      --rest;
    }
  }
  if (rest > 0) throw DataError("build_synthetic: pools too small for an equal label distribution");

  Rng rng(spec.seed);
  std::vector<NodeId> picked_sparse, picked_dense;
  for (std::size_t i = 0; i < k; ++i) {
    for (auto* pick : {&picked_sparse, &picked_dense}) {
      auto pool = (pick == &picked_sparse ? sparse : dense)[kept[i]];
      shuffle(pool, rng);
      pick->insert(pick->end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota[i]));
    }
  }
  std::sort(picked_sparse.begin(), picked_sparse.end());
  std::sort(picked_dense.begin(), picked_dense.end());

  std::vector<NodeId> order = picked_sparse;
  order.insert(order.end(), picked_dense.begin(), picked_dense.end());
  const Graph merged = induced_subgraph(source, order);  // no cross edges: they are dropped below

  std::map<int, int> remap;
  for (std::size_t i = 0; i < k; ++i) remap[kept[i]] = static_cast<int>(i);
  std::vector<Edge> edges;
  for (auto [u, v] : merged.edge_list())
    if ((u < half) == (v < half)) edges.emplace_back(u, v);
  std::vector<int> labels(spec.total_nodes);
  for (std::size_t i = 0; i < spec.total_nodes; ++i) labels[i] = remap.at(merged.labels()[i]);

  // Per-region seeded split.
  SplitMasks masks{std::vector<bool>(spec.total_nodes), std::vector<bool>(spec.total_nodes),
                   std::vector<bool>(spec.total_nodes)};
  for (std::size_t r = 0; r < 2; ++r) {
    std::vector<std::size_t> ids(half);
    for (std::size_t i = 0; i < half; ++i) ids[i] = r * half + i;
    shuffle(ids, rng);
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(half)));
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val_fraction * static_cast<double>(half)));
    for (std::size_t i = 0; i < half; ++i) {
      if (i < n_train) masks.train[ids[i]] = true;
      else if (i < n_train + n_val) masks.val[ids[i]] = true;
      else masks.test[ids[i]] = true;
    }
  }

  SyntheticGraph out;
  out.graph = build_graph(edges, merged.features(), std::move(labels), std::move(masks), k);
  out.region.assign(spec.total_nodes, 0);
  std::fill(out.region.begin() + static_cast<std::ptrdiff_t>(half), out.region.end(), 1);
  out.kept_labels = std::move(kept);
  out.threshold = threshold;
  return out;
}

Graph make_planted_source(const PlantedSpec& spec) {
  if (spec.classes < 2 || spec.nodes_per_block < spec.classes || spec.features == 0)
    throw std::invalid_argument("make_planted_source: need >= 2 classes, enough nodes and features");
  Rng rng(spec.seed);
  auto gaussian = [&rng] {
    // Box-Muller on two uniforms in (0, 1].
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };

  const std::size_t nb = spec.nodes_per_block;
  const std::size_t n = 2 * nb;
  std::vector<int> labels(n);
  for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<int>((v % nb) % spec.classes);

  Matrix centroids(spec.classes, spec.features);
  for (double& x : centroids.data()) x = gaussian();
  Matrix x(n, spec.features);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t j = 0; j < spec.features; ++j)
      x(v, j) = spec.feature_signal * centroids(static_cast<std::size_t>(labels[v]), j) + gaussian();

  std::vector<Edge> edges;
  for (std::size_t block = 0; block < 2; ++block) {
    const std::size_t base = block * nb;
    const double degree = block == 0 ? spec.dense_degree : spec.sparse_degree;
    std::vector<std::vector<NodeId>> by_class(spec.classes);
    for (std::size_t i = 0; i < nb; ++i) by_class[static_cast<std::size_t>(labels[base + i])].push_back(static_cast<NodeId>(base + i));
    const auto n_edges = static_cast<std::size_t>(std::llround(degree * static_cast<double>(nb) / 2.0));
    for (std::size_t e = 0; e < n_edges; ++e) {
      const auto u = static_cast<NodeId>(base + rng.below(nb));
      NodeId v;
      if (rng.uniform() < spec.homophily) {
        const auto& same = by_class[static_cast<std::size_t>(labels[u])];
        v = same[rng.below(same.size())];
      } else {
        v = static_cast<NodeId>(base + rng.below(nb));
      }
      if (u != v) edges.emplace_back(u, v);
    }
  }

  // Every node is labeled; the split is re-drawn by build_synthetic.
  SplitMasks masks{std::vector<bool>(n), std::vector<bool>(n), std::vector<bool>(n)};
  for (std::size_t v = 0; v < n; ++v) {
    const double r = rng.uniform();
    (r < 0.5 ? masks.train : r < 0.75 ? masks.val : masks.test)[v] = true;
  }
  return build_graph(edges, std::move(x), std::move(labels), std::move(masks), spec.classes);
}

std::vector<SweepRow> depth_sweep(const Graph& g, std::span<const SweepRegion> regions, std::size_t max_depth,
                                  Flavor flavor, const TrainConfig& cfg, std::span<const std::uint64_t> seeds,
                                  Split split) {
  if (seeds.empty()) throw std::invalid_argument("depth_sweep: need at least one seed");
  for (const auto& r : regions) {
    if (r.mask.size() != g.num_nodes()) throw std::invalid_argument("depth_sweep: region mask length mismatch");
    std::size_t hits = 0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) hits += r.mask[v] && g.mask(split)[v];
    if (hits == 0) throw std::invalid_argument("depth_sweep: region '" + r.name + "' has no " +
                                               std::string(split_name(split)) + " nodes");
  }
  const NormAdjacency adj = normalize(g, adjacency_for(flavor));
  std::vector<SweepRow> rows;
  for (std::size_t depth = 0; depth <= max_depth; ++depth) {
    std::vector<std::vector<double>> acc(regions.size());
    for (std::uint64_t seed : seeds) {
      TrainConfig c = cfg;
      c.paradigm = Paradigm::Single;
      c.seed = seed;
      AdmpParams params = AdmpParams::init({flavor, depth, g.num_features(), cfg.hidden, g.num_classes()}, seed);
      train_single(params, g, adj, c);
      const StandardGnn net = extract_standard_gnn(params, depth);
      Rng unused(0);
      const Matrix probs = standard_gnn_probs(net, g, adj, ad::Mode::Eval, 0.0, unused);
      for (std::size_t r = 0; r < regions.size(); ++r) {
        std::vector<bool> mask(g.num_nodes());
        for (std::size_t v = 0; v < g.num_nodes(); ++v) mask[v] = regions[r].mask[v] && g.mask(split)[v];
        acc[r].push_back(masked_accuracy(probs, g.labels(), mask));
      }
    }
    for (std::size_t r = 0; r < regions.size(); ++r)
      rows.push_back({depth, regions[r].name, split, mean_std(acc[r]).mean});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream s;
  s << "depth,region,split,accuracy\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.accuracy);
    s << r.depth << "," << r.region << "," << split_name(r.split) << "," << buf << "\n";
  }
  return s.str();
}

}  // namespace admp
