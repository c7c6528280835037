#include <cmath>
#include <numeric>

#include "admp/centrality.hpp"
#include "admp/errors.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace admp;

namespace {

Graph bare(std::size_t n, std::vector<Edge> edges) {
  return build_graph(edges, Matrix(n, 1), std::vector<int>(n, 0), {});
}

// For each k, repeatedly delete every node of degree < k; survivors have core >= k.
std::vector<double> naive_core(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> core(n, 0);
  for (std::size_t k = 1; k <= n; ++k) {
    std::vector<bool> alive(n, true);
    bool changed = true;
    while (changed) {
      changed = false;
      for (NodeId v = 0; v < n; ++v) {
        if (!alive[v]) continue;
        std::size_t d = 0;
        for (NodeId u : g.neighbors(v)) d += alive[u];
        if (d < k) {
          alive[v] = false;
          changed = true;
        }
      }
    }
    for (std::size_t v = 0; v < n; ++v)
      if (alive[v]) core[v] = static_cast<double>(k);
  }
  return core;
}

}  // namespace

TEST_CASE("degree examples") {
  CHECK(degree_centrality(bare(1, {})).values == std::vector<double>{0});
  const auto star = degree_centrality(bare(4, {{0, 1}, {0, 2}, {0, 3}})).values;
  CHECK(star[0] == 3);
  CHECK(star[1] == 1);
}

TEST_CASE("k-core examples") {
  CHECK(kcore(bare(3, {{0, 1}, {1, 2}})).values == std::vector<double>{1, 1, 1});
  const Graph tri = bare(4, {{0, 1}, {1, 2}, {0, 2}, {2, 3}});
  CHECK(kcore(tri).values == std::vector<double>{2, 2, 2, 1});
  CHECK(kcore(tri).values == naive_core(tri));
  CHECK(kcore(bare(2, {})).values == std::vector<double>{0, 0});
}

TEST_CASE("k-core equals naive peeling on random graphs") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Graph g = testing::random_graph(30, 0.2, 1, 1, seed);
    CHECK(kcore(g).values == naive_core(g));
  }
}

TEST_CASE("walk count examples and dense oracle") {
  CHECK(walk_count2(bare(3, {{0, 1}, {1, 2}})).values == std::vector<double>{2, 2, 2});
  CHECK(walk_count2(bare(1, {})).values == std::vector<double>{0});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = testing::random_graph(20, 0.25, 1, 1, seed);
    const Matrix a = testing::dense_adjacency(g);
    const Matrix a2 = testing::dense_product(testing::dense_product(a, a), Matrix(20, 1, 1.0));
    CHECK(walk_count2(g).values == a2.data());
  }
}

TEST_CASE("pagerank examples") {
  for (double v : pagerank(bare(3, {{0, 1}, {1, 2}, {0, 2}})).values) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-9));
  for (double v : pagerank(bare(2, {{0, 1}})).values) CHECK(v == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("pagerank on a star solves the two-variable fixed point") {
  // c = (1-d)/4 + d*3*l ; l = (1-d)/4 + d*c/3 ; solved by substitution.
  const double d = 0.85;
  const double t = (1 - d) / 4;
  const double c = (t + 3 * d * t) / (1 - d * d);
  const double l = t + d * c / 3;
  CHECK(c + 3 * l == doctest::Approx(1.0).epsilon(1e-14));
  const auto pr = pagerank(bare(4, {{0, 1}, {0, 2}, {0, 3}})).values;
  CHECK(pr[0] == doctest::Approx(c).epsilon(1e-8));
  for (int i = 1; i < 4; ++i) CHECK(pr[i] == doctest::Approx(l).epsilon(1e-8));
}

TEST_CASE("pagerank sums to one and follows relabeling") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Graph g = testing::random_graph(25, 0.1, 1, 1, seed);  // sparse: isolated nodes likely
    const auto pr = pagerank(g).values;
    CHECK(std::abs(std::accumulate(pr.begin(), pr.end(), 0.0) - 1.0) < 1e-9);
    Rng rng(seed);
    const auto perm = testing::random_permutation(25, rng);
    const auto pq = pagerank(relabel(g, perm)).values;
    for (std::size_t v = 0; v < 25; ++v) CHECK(std::abs(pq[perm[v]] - pr[v]) < 1e-9);
  }
}

TEST_CASE("pagerank reports non-convergence") {
  CHECK_THROWS_AS(pagerank(testing::random_graph(30, 0.2, 1, 1, 1), {0.85, 1e-30, 3}), NumericalError);
}

TEST_CASE("bucketize examples") {
  const std::vector<bool> all4(4, true);
  CentralityVector cv{Metric::Degree, {4, 1, 3, 2}};
  const auto one = bucketize(cv, 1, all4);
  CHECK(one.bucket_of == std::vector<std::size_t>{0, 0, 0, 0});
  const auto two = bucketize(cv, 2, all4);
  CHECK(two.bucket_of == std::vector<std::size_t>{1, 0, 1, 0});
  CentralityVector flat{Metric::Degree, {1, 1, 1, 1}};
  CHECK(bucketize(flat, 2, all4).bucket_of == std::vector<std::size_t>{0, 0, 1, 1});
  CHECK_THROWS(bucketize(flat, 5, all4));
  CHECK_THROWS(bucketize(flat, 0, all4));
  CHECK_THROWS(bucketize(flat, 2, std::vector<bool>(4, false)));
}

TEST_CASE("bucket sizes differ by at most one and follow rank order") {
  Rng rng(8);
  for (std::size_t n : {1u, 7u, 30u, 101u}) {
    CentralityVector cv{Metric::PageRank, std::vector<double>(n)};
    for (double& v : cv.values) v = std::floor(rng.uniform(0, 5));
    for (std::size_t c = 1; c <= std::min<std::size_t>(n, 12); ++c) {
      const auto b = bucketize(cv, c, std::vector<bool>(n, true));
      std::vector<std::size_t> size(c);
      for (auto id : b.bucket_of) ++size.at(id);
      const auto [lo, hi] = std::minmax_element(size.begin(), size.end());
      CHECK(*hi - *lo <= 1);
      for (std::size_t r = 1; r < n; ++r) {
        CHECK(b.bucket_of[b.ranked[r - 1]] <= b.bucket_of[b.ranked[r]]);
        const auto prev = std::make_pair(cv.values[b.ranked[r - 1]], b.ranked[r - 1]);
        CHECK(prev < std::make_pair(cv.values[b.ranked[r]], b.ranked[r]));
      }
      const auto again = bucketize_with_boundaries(cv, b.boundaries);
      CHECK(again.bucket_of == b.bucket_of);
    }
  }
}

TEST_CASE("metric names round trip") {
  for (Metric m : kAllMetrics) CHECK(parse_metric(metric_name(m)) == m);
  CHECK(parse_metric("k-core") == Metric::KCore);
  CHECK_THROWS(parse_metric("betweenness"));
}
