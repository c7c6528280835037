#include "admp/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "admp/errors.hpp"

namespace admp {

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::Degree: return "degree";
    case Metric::KCore: return "kcore";
    case Metric::PageRank: return "pagerank";
    case Metric::WalkCount2: return "walk";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  if (name == "degree") return Metric::Degree;
  if (name == "kcore" || name == "k-core") return Metric::KCore;
  if (name == "pagerank") return Metric::PageRank;
  if (name == "walk" || name == "walkcount" || name == "walk_count2") return Metric::WalkCount2;
  throw std::invalid_argument("unknown centrality metric '" + std::string(name) + "'");
}

CentralityVector degree_centrality(const Graph& g) {
  CentralityVector cv{Metric::Degree, std::vector<double>(g.num_nodes())};
  for (NodeId v = 0; v < g.num_nodes(); ++v) cv.values[v] = static_cast<double>(g.degree(v));
  return cv;
}

CentralityVector kcore(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> deg(n);
  std::size_t max_deg = 0;
  for (NodeId v = 0; v < n; ++v) max_deg = std::max(max_deg, deg[v] = g.degree(v));

  // Nodes sorted by current degree, with bin starts; pos[v] indexes into vert.
  std::vector<std::size_t> bin(max_deg + 2, 0);
  for (NodeId v = 0; v < n; ++v) ++bin[deg[v] + 1];
  std::partial_sum(bin.begin(), bin.end(), bin.begin());
  std::vector<NodeId> vert(n);
  std::vector<std::size_t> pos(n);
  {
    std::vector<std::size_t> next(bin.begin(), bin.end() - 1);
    for (NodeId v = 0; v < n; ++v) {
      pos[v] = next[deg[v]]++;
      vert[pos[v]] = v;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId v = vert[i];
    for (NodeId u : g.neighbors(v)) {
      if (deg[u] > deg[v]) {
        const std::size_t du = deg[u];
        const std::size_t pu = pos[u];
        const std::size_t pw = bin[du];
        const NodeId w = vert[pw];
        if (u != w) {
          std::swap(vert[pu], vert[pw]);
          pos[u] = pw;
          pos[w] = pu;
        }
        ++bin[du];
        --deg[u];
      }
    }
  }
  CentralityVector cv{Metric::KCore, std::vector<double>(n)};
  for (NodeId v = 0; v < n; ++v) cv.values[v] = static_cast<double>(deg[v]);
  return cv;
}

CentralityVector pagerank(const Graph& g, const PageRankOptions& opts) {
  if (!(opts.damping > 0.0 && opts.damping < 1.0)) throw std::invalid_argument("pagerank: damping must be in (0, 1)");
  const std::size_t n = g.num_nodes();
  CentralityVector cv{Metric::PageRank, std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0)};
  if (n == 0) return cv;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double>& x = cv.values;
  std::vector<double> next(n);
  double residual = 0.0;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    double dangling = 0.0;
    for (NodeId v = 0; v < n; ++v)
      if (g.degree(v) == 0) dangling += x[v];
    const double base = (1.0 - opts.damping) * inv_n + opts.damping * dangling * inv_n;
    for (NodeId v = 0; v < n; ++v) {
      double s = 0.0;
      for (NodeId u : g.neighbors(v)) s += x[u] / static_cast<double>(g.degree(u));
      next[v] = base + opts.damping * s;
    }
    residual = 0.0;
    for (NodeId v = 0; v < n; ++v) residual += std::abs(next[v] - x[v]);
    x.swap(next);
    if (residual < opts.tol) {
      const double total = std::accumulate(x.begin(), x.end(), 0.0);
      for (double& v : x) v /= total;
      return cv;
    }
  }
  throw NumericalError("pagerank: no convergence after " + std::to_string(opts.max_iter) +
                       " iterations (L1 residual " + std::to_string(residual) + ")");
}

CentralityVector walk_count2(const Graph& g) {
  CentralityVector cv{Metric::WalkCount2, std::vector<double>(g.num_nodes())};
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    std::size_t s = 0;
    for (NodeId u : g.neighbors(v)) s += g.degree(u);
    cv.values[v] = static_cast<double>(s);
  }
  return cv;
}

CentralityVector compute_centrality(Metric m, const Graph& g) {
  switch (m) {
    case Metric::Degree: return degree_centrality(g);
    case Metric::KCore: return kcore(g);
    case Metric::PageRank: return pagerank(g);
    case Metric::WalkCount2: return walk_count2(g);
  }
  throw std::invalid_argument("compute_centrality: unknown metric");
}

namespace {

std::vector<NodeId> rank_nodes(const CentralityVector& cv) {
  std::vector<NodeId> order(cv.values.size());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    if (cv.values[a] != cv.values[b]) return cv.values[a] < cv.values[b];
    return a < b;
  });
  return order;
}

BucketAssignment assign(std::vector<NodeId> ranked, std::vector<std::size_t> boundaries) {
  BucketAssignment out;
  out.n_buckets = boundaries.size() + 1;
  out.bucket_of.assign(ranked.size(), 0);
  std::size_t bucket = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    while (bucket < boundaries.size() && r >= boundaries[bucket]) ++bucket;
    out.bucket_of[ranked[r]] = bucket;
  }
  out.boundaries = std::move(boundaries);
  out.ranked = std::move(ranked);
  return out;
}

}  // namespace

BucketAssignment bucketize(const CentralityVector& cv, std::size_t n_buckets, const std::vector<bool>& subset) {
  const std::size_t n = cv.values.size();
  if (n_buckets == 0) throw std::invalid_argument("bucketize: need at least one bucket");
  if (n_buckets > n)
    throw std::invalid_argument("bucketize: " + std::to_string(n_buckets) + " buckets for " + std::to_string(n) + " nodes");
  if (subset.size() != n || std::none_of(subset.begin(), subset.end(), [](bool b) { return b; }))
    throw std::invalid_argument("bucketize: node subset must be non-empty and cover the node range");
  std::vector<std::size_t> cuts;
  // Rank r belongs to bucket floor(r*C/N); bucket k therefore starts at ceil(k*N/C).
  for (std::size_t k = 1; k < n_buckets; ++k) cuts.push_back((k * n + n_buckets - 1) / n_buckets);
  return assign(rank_nodes(cv), std::move(cuts));
}

BucketAssignment bucketize_with_boundaries(const CentralityVector& cv, std::vector<std::size_t> boundaries) {
  if (!std::is_sorted(boundaries.begin(), boundaries.end()) ||
      (!boundaries.empty() && boundaries.back() > cv.values.size()))
    throw DataError("bucket boundaries must be ascending ranks within the node count");
  return assign(rank_nodes(cv), std::move(boundaries));
}

}  // namespace admp
