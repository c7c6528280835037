#include "admp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "admp/errors.hpp"

namespace admp {

const std::vector<bool>& SplitMasks::get(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::Val: return val;
    case Split::Test: return test;
  }
  throw std::invalid_argument("unknown split");
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u)
    for (NodeId v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

Graph build_graph(std::span<const Edge> edges, Matrix features, std::vector<int> labels, SplitMasks masks,
                  std::size_t num_classes, BuildReport* report) {
  const std::size_t n = features.rows();
  if (labels.size() != n) throw DataError("build_graph: labels length " + std::to_string(labels.size()) +
                                          " does not match " + std::to_string(n) + " feature rows");
  for (auto* m : {&masks.train, &masks.val, &masks.test}) {
    if (m->empty()) m->assign(n, false);
    if (m->size() != n) throw DataError("build_graph: mask length does not match node count");
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (int(masks.train[v]) + int(masks.val[v]) + int(masks.test[v]) > 1)
      throw DataError("build_graph: node " + std::to_string(v) + " is in more than one split");
  }
  if (!features.all_finite()) throw DataError("build_graph: non-finite feature value");

  if (num_classes == 0) {
    int mx = -1;
    for (int y : labels) mx = std::max(mx, y);
    num_classes = static_cast<std::size_t>(mx + 1);
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (labels[v] < 0 || static_cast<std::size_t>(labels[v]) >= num_classes)
      throw DataError("build_graph: label " + std::to_string(labels[v]) + " of node " + std::to_string(v) +
                      " outside [0, " + std::to_string(num_classes) + ")");
  }

  BuildReport rep;
  std::vector<Edge> pairs;
  pairs.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u >= n || v >= n)
      throw DataError("build_graph: edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
    if (u == v) {
      ++rep.self_loops_dropped;
      continue;
    }
    pairs.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(pairs.begin(), pairs.end());
  const auto last = std::unique(pairs.begin(), pairs.end());
  rep.duplicates_merged = static_cast<std::size_t>(pairs.end() - last);
  pairs.erase(last, pairs.end());

  Graph g;
  g.offsets_.assign(n + 1, 0);
  for (auto [u, v] : pairs) {
    ++g.offsets_[u + 1];
    ++g.offsets_[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.neighbors_.resize(2 * pairs.size());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  // pairs are sorted by (u, v): rows fill in ascending order for the u side;
  // the v side receives u values in ascending u order too.
  for (auto [u, v] : pairs) {
    g.neighbors_[cursor[u]++] = v;
    g.neighbors_[cursor[v]++] = u;
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
              g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));

  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.masks_ = std::move(masks);
  g.num_classes_ = num_classes;
  if (report) *report = rep;
  return g;
}

Graph relabel(const Graph& g, std::span<const NodeId> perm) {
  const std::size_t n = g.num_nodes();
  if (perm.size() != n) throw std::invalid_argument("relabel: permutation length mismatch");
  std::vector<bool> seen(n, false);
  for (NodeId p : perm) {
    if (p >= n || seen[p]) throw std::invalid_argument("relabel: not a permutation");
    seen[p] = true;
  }
  std::vector<Edge> edges;
  for (auto [u, v] : g.edge_list()) edges.emplace_back(perm[u], perm[v]);
  Matrix x(n, g.num_features());
  std::vector<int> y(n);
  SplitMasks m{std::vector<bool>(n), std::vector<bool>(n), std::vector<bool>(n)};
  for (std::size_t v = 0; v < n; ++v) {
    const NodeId p = perm[v];
    std::copy(g.features().row(v).begin(), g.features().row(v).end(), x.row(p).begin());
    y[p] = g.labels()[v];
    m.train[p] = g.masks().train[v];
    m.val[p] = g.masks().val[v];
    m.test[p] = g.masks().test[v];
  }
  return build_graph(edges, std::move(x), std::move(y), std::move(m), g.num_classes());
}

Graph induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
  constexpr NodeId kAbsent = ~NodeId{0};
  std::vector<NodeId> remap(g.num_nodes(), kAbsent);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= g.num_nodes() || remap[nodes[i]] != kAbsent)
      throw std::invalid_argument("induced_subgraph: invalid or repeated node id");
    remap[nodes[i]] = static_cast<NodeId>(i);
  }
  std::vector<Edge> edges;
  for (auto [u, v] : g.edge_list())
    if (remap[u] != kAbsent && remap[v] != kAbsent) edges.emplace_back(remap[u], remap[v]);
  const std::size_t k = nodes.size();
  Matrix x(k, g.num_features());
  std::vector<int> y(k);
  SplitMasks m{std::vector<bool>(k), std::vector<bool>(k), std::vector<bool>(k)};
  for (std::size_t i = 0; i < k; ++i) {
    const NodeId v = nodes[i];
    std::copy(g.features().row(v).begin(), g.features().row(v).end(), x.row(i).begin());
    y[i] = g.labels()[v];
    m.train[i] = g.masks().train[v];
    m.val[i] = g.masks().val[v];
    m.test[i] = g.masks().test[v];
  }
  return build_graph(edges, std::move(x), std::move(y), std::move(m), g.num_classes());
}

Matrix NormAdjacency::to_dense() const {
  Matrix d(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) d(r, col[k]) = val[k];
  return d;
}

NormAdjacency normalize(const Graph& g, AdjacencyKind kind) {
  const std::size_t n = g.num_nodes();
  NormAdjacency a;
  a.kind = kind;
  a.n = n;
  a.row_ptr.assign(n + 1, 0);
  const bool self = kind == AdjacencyKind::GcnSymmetric;
  a.col.reserve(g.column_indices().size() + (self ? n : 0));
  a.val.reserve(a.col.capacity());

  std::vector<double> inv_sqrt(n);
  for (NodeId v = 0; v < n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));

  for (NodeId u = 0; u < n; ++u) {
    bool placed_self = !self;
    for (NodeId v : g.neighbors(u)) {
      if (!placed_self && u < v) {
        a.col.push_back(u);
        a.val.push_back(inv_sqrt[u] * inv_sqrt[u]);
        placed_self = true;
      }
      a.col.push_back(v);
      a.val.push_back(self ? inv_sqrt[u] * inv_sqrt[v] : 1.0);
    }
    if (!placed_self) {
      a.col.push_back(u);
      a.val.push_back(inv_sqrt[u] * inv_sqrt[u]);
    }
    a.row_ptr[u + 1] = a.col.size();
  }
  return a;
}

Matrix spmm(const NormAdjacency& a, const Matrix& x) {
  if (x.rows() != a.n)
    throw std::invalid_argument("spmm: operator is " + std::to_string(a.n) + "x" + std::to_string(a.n) +
                                " but dense operand has " + std::to_string(x.rows()) + " rows");
  Matrix out(a.n, x.cols());
  const std::size_t k = x.cols();
  for (std::size_t r = 0; r < a.n; ++r) {
    auto orow = out.row(r);
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) {
      const double w = a.val[e];
      auto xrow = x.row(a.col[e]);
      for (std::size_t j = 0; j < k; ++j) orow[j] += w * xrow[j];
    }
  }
  return out;
}

}  // namespace admp
