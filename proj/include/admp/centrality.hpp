#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "admp/graph.hpp"

namespace admp {

enum class Metric { Degree, KCore, PageRank, WalkCount2 };

std::string_view metric_name(Metric m);
/// Accepts "degree", "kcore"/"k-core", "pagerank", "walk"/"walkcount"/"walk_count2". Throws std::invalid_argument.
Metric parse_metric(std::string_view name);
inline constexpr Metric kAllMetrics[] = {Metric::Degree, Metric::KCore, Metric::WalkCount2, Metric::PageRank};

struct CentralityVector {
  Metric metric = Metric::Degree;
  std::vector<double> values;
};

CentralityVector degree_centrality(const Graph& g);

/// Core numbers by bucket-queue peeling (Batagelj–Zaversnik), O(|V| + |E|).
CentralityVector kcore(const Graph& g);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-10;
  std::size_t max_iter = 1000;
};

/// Power iteration with uniform teleport; isolated nodes spread their mass
/// uniformly. Stops when the L1 change drops below tol, throws
/// NumericalError (with the last residual) after max_iter sweeps.
CentralityVector pagerank(const Graph& g, const PageRankOptions& opts = {});

/// Number of length-2 walks from each node: sum of neighbor degrees.
CentralityVector walk_count2(const Graph& g);

CentralityVector compute_centrality(Metric m, const Graph& g);

/// Equal-size rank buckets over all nodes.
struct BucketAssignment {
  std::size_t n_buckets = 0;
  std::vector<std::size_t> boundaries;  // first rank of buckets 1..C-1
  std::vector<std::size_t> bucket_of;   // node -> bucket
  std::vector<NodeId> ranked;           // nodes by ascending (value, id)
};

/// Ranks every node by (value, node id) ascending and cuts the ranking into C
/// contiguous groups whose sizes differ by at most one. `subset` (the nodes a
/// policy will be fit on) must be non-empty; it does not affect the cut points.
BucketAssignment bucketize(const CentralityVector& cv, std::size_t n_buckets, const std::vector<bool>& subset);

/// Rebuilds an assignment from stored cut points (policy files).
BucketAssignment bucketize_with_boundaries(const CentralityVector& cv, std::vector<std::size_t> boundaries);

}  // namespace admp
