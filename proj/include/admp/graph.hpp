#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "admp/matrix.hpp"

namespace admp {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

enum class Split { Train, Val, Test };

struct SplitMasks {
  std::vector<bool> train;
  std::vector<bool> val;
  std::vector<bool> test;

  const std::vector<bool>& get(Split s) const;
};

struct BuildReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_merged = 0;
};

/// Immutable undirected graph with node features, labels and split masks.
///
/// Adjacency is stored row-compressed and symmetric: every undirected edge
/// appears in both endpoint rows. Neighbor lists are sorted ascending and hold
/// no self-loops; self-loops only enter through GCN normalization.
class Graph {
public:
  Graph() = default;

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return neighbors_.size() / 2; }
  std::size_t num_features() const { return features_.cols(); }
  std::size_t num_classes() const { return num_classes_; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {neighbors_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

  const std::vector<std::size_t>& row_offsets() const { return offsets_; }
  const std::vector<NodeId>& column_indices() const { return neighbors_; }
  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const SplitMasks& masks() const { return masks_; }
  const std::vector<bool>& mask(Split s) const { return masks_.get(s); }

  /// Unique undirected pairs (u < v), ascending.
  std::vector<Edge> edge_list() const;

private:
  friend Graph build_graph(std::span<const Edge>, Matrix, std::vector<int>, SplitMasks, std::size_t, BuildReport*);

  std::vector<std::size_t> offsets_;
  std::vector<NodeId> neighbors_;
  Matrix features_;
  std::vector<int> labels_;
  SplitMasks masks_;
  std::size_t num_classes_ = 0;
};

/// Validates inputs and builds the symmetric store. Self-loops are dropped and
/// duplicate (or reversed) pairs merged; both are counted in `report`.
/// `num_classes == 0` derives c from the largest label.
/// Throws DataError on out-of-range ids/labels, overlapping masks or non-finite features.
Graph build_graph(std::span<const Edge> edges, Matrix features, std::vector<int> labels, SplitMasks masks,
                  std::size_t num_classes = 0, BuildReport* report = nullptr);

/// Relabels nodes: node v of `g` becomes node perm[v].
Graph relabel(const Graph& g, std::span<const NodeId> perm);

/// Induced subgraph on `nodes` (new ids follow the order of `nodes`).
Graph induced_subgraph(const Graph& g, std::span<const NodeId> nodes);

enum class AdjacencyKind { GcnSymmetric, RawSum };

/// Row-compressed sparse operator used by the aggregation step.
struct NormAdjacency {
  AdjacencyKind kind = AdjacencyKind::GcnSymmetric;
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<NodeId> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }
  Matrix to_dense() const;
};

/// GcnSymmetric: D̃^{-1/2}(A+I)D̃^{-1/2}; RawSum: A with unit weights, no diagonal.
NormAdjacency normalize(const Graph& g, AdjacencyKind kind);

/// Sparse-dense product. Each output row accumulates its stored entries in
/// ascending column order, so results are bit-reproducible.
Matrix spmm(const NormAdjacency& a, const Matrix& x);

}  // namespace admp
