#include <cmath>

#include "admp/errors.hpp"
#include "admp/graph.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace admp;

namespace {

Graph bare(std::size_t n, std::vector<Edge> edges) {
  return build_graph(edges, Matrix(n, 1, 1.0), std::vector<int>(n, 0), {});
}

}  // namespace

TEST_CASE("build_graph stores undirected edges once") {
  const Graph g = bare(2, {{0, 1}});
  CHECK(g.num_edges() == 1);
  REQUIRE(g.neighbors(0).size() == 1);
  CHECK(g.neighbors(0)[0] == 1);
  CHECK(g.neighbors(1)[0] == 0);
}

TEST_CASE("build_graph drops self loops and merges duplicates") {
  BuildReport rep;
  const std::vector<Edge> edges{{0, 1}, {1, 0}, {0, 0}};
  const Graph g = build_graph(edges, Matrix(2, 1), {0, 0}, {}, 0, &rep);
  CHECK(rep.self_loops_dropped == 1);
  CHECK(rep.duplicates_merged == 1);
  CHECK(g.edge_list() == bare(2, {{0, 1}}).edge_list());
}

TEST_CASE("build_graph validation") {
  CHECK_THROWS_AS(bare(2, {{0, 5}}), DataError);
  CHECK_THROWS_AS(build_graph({}, Matrix(2, 1), {0, -1}, {}), DataError);
  CHECK_THROWS_AS(build_graph({}, Matrix(2, 1), {0, 3}, {}, 2), DataError);
  SplitMasks overlap{{true, false}, {true, false}, {false, false}};
  CHECK_THROWS_AS(build_graph({}, Matrix(2, 1), {0, 0}, overlap), DataError);
  Matrix bad(2, 1);
  bad(1, 0) = std::nan("");
  CHECK_THROWS_AS(build_graph({}, bad, {0, 0}, {}), DataError);
}

TEST_CASE("normalize: hand-computed entries") {
  const NormAdjacency iso = normalize(bare(1, {}), AdjacencyKind::GcnSymmetric);
  CHECK(iso.to_dense() == Matrix(1, 1, 1.0));

  const Matrix pair = normalize(bare(2, {{0, 1}}), AdjacencyKind::GcnSymmetric).to_dense();
  for (double v : pair.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

  const Matrix path = normalize(bare(3, {{0, 1}, {1, 2}}), AdjacencyKind::GcnSymmetric).to_dense();
  CHECK(path(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-15));
  CHECK(path(0, 1) == doctest::Approx(0.40825).epsilon(1e-5));
  CHECK(path(0, 2) == 0.0);
}

TEST_CASE("spmm: examples") {
  const Graph path = bare(3, {{0, 1}, {1, 2}});
  const Matrix out = spmm(normalize(path, AdjacencyKind::RawSum), Matrix(3, 1, 1.0));
  CHECK(out(0, 0) == 1.0);
  CHECK(out(1, 0) == 2.0);
  CHECK(out(2, 0) == 1.0);

  const Matrix iso = spmm(normalize(bare(1, {}), AdjacencyKind::GcnSymmetric), Matrix(1, 1, 3.5));
  CHECK(iso(0, 0) == 3.5);
}

TEST_CASE("spmm matches a dense product built from the formula") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = testing::random_graph(6, 0.4, 4, 2, seed);
    Rng rng(seed);
    Matrix x(6, 4);
    for (double& v : x.data()) v = rng.uniform(-2, 2);

    Matrix gcn = testing::dense_adjacency(g);
    std::vector<double> deg(6);
    for (std::size_t u = 0; u < 6; ++u) deg[u] = static_cast<double>(g.degree(static_cast<NodeId>(u))) + 1.0;
    for (std::size_t u = 0; u < 6; ++u) {
      gcn(u, u) = 1.0;
      for (std::size_t v = 0; v < 6; ++v) gcn(u, v) /= std::sqrt(deg[u] * deg[v]);
    }
    CHECK(max_abs_diff(spmm(normalize(g, AdjacencyKind::GcnSymmetric), x), testing::dense_product(gcn, x)) < 1e-12);
    CHECK(max_abs_diff(spmm(normalize(g, AdjacencyKind::RawSum), x),
                       testing::dense_product(testing::dense_adjacency(g), x)) < 1e-12);
  }
}

TEST_CASE("normalized operators are symmetric") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = testing::random_graph(12, 0.3, 2, 2, seed);
    for (auto kind : {AdjacencyKind::GcnSymmetric, AdjacencyKind::RawSum}) {
      const Matrix a = normalize(g, kind).to_dense();
      CHECK(max_abs_diff(a, transpose(a)) == 0.0);
    }
  }
}

TEST_CASE("RawSum times ones is the degree vector") {
  const Graph g = testing::random_graph(25, 0.2, 2, 2, 3);
  const Matrix out = spmm(normalize(g, AdjacencyKind::RawSum), Matrix(25, 1, 1.0));
  for (NodeId v = 0; v < 25; ++v) CHECK(out(v, 0) == static_cast<double>(g.degree(v)));
}

TEST_CASE("aggregation is permutation equivariant") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = testing::random_graph(15, 0.3, 3, 2, seed);
    Rng rng(seed + 100);
    const auto perm = testing::random_permutation(15, rng);
    const Graph h = relabel(g, perm);
    CHECK(h.num_edges() == g.num_edges());
    for (auto kind : {AdjacencyKind::GcnSymmetric, AdjacencyKind::RawSum}) {
      const Matrix a = spmm(normalize(g, kind), g.features());
      const Matrix b = spmm(normalize(h, kind), h.features());
      for (std::size_t v = 0; v < 15; ++v)
        for (std::size_t k = 0; k < 3; ++k) CHECK(b(perm[v], k) == doctest::Approx(a(v, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("induced subgraph keeps internal edges only") {
  const Graph g = bare(4, {{0, 1}, {1, 2}, {2, 3}});
  const std::vector<NodeId> keep{1, 2, 3};
  const Graph s = induced_subgraph(g, keep);
  CHECK(s.num_nodes() == 3);
  CHECK(s.num_edges() == 2);
}
