#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "admp/graph.hpp"
#include "admp/model.hpp"
#include "admp/train.hpp"

namespace admp {

struct SyntheticSpec {
  std::size_t total_nodes = 5000;       // N, split evenly between the two regions
  std::optional<double> core_threshold; // dense: core >= threshold; default median core number
  std::uint64_t seed = 0;
  double train_fraction = 0.5;          // per-region split of the sampled nodes
  double val_fraction = 0.25;
};

struct SyntheticGraph {
  Graph graph;                       // sparse region first, then dense region
  std::vector<std::uint8_t> region;  // 0 sparse, 1 dense
  std::vector<int> kept_labels;      // source labels kept, remapped to 0..k-1 in order
  double threshold = 0.0;

  std::vector<bool> region_mask(std::uint8_t r) const;
};

/// Dense/sparse merged graph from a source graph.
///
/// Nodes are pooled by core number; the kept labels are the largest set of k
/// labels each present at least floor(N / (2 k)) times in both pools. Each
/// pool contributes N/2 nodes with identical per-label counts, and the result is the disjoint union of the two induced subgraphs.
/// Throws DataError when the requested sizes cannot be met.
SyntheticGraph build_synthetic(const Graph& source, const SyntheticSpec& spec);

/// Planted source with one dense and one sparse community block (no edges
/// between blocks), balanced labels, homophilous edges and noisy class-centroid features.
struct PlantedSpec {
  std::size_t nodes_per_block = 1500;
  std::size_t classes = 4;
  std::size_t features = 16;
  double dense_degree = 24.0;
  double sparse_degree = 2.5;
  double homophily = 0.8;
  double feature_signal = 0.6;  // centroid scale relative to unit Gaussian noise
  std::uint64_t seed = 0;
};

Graph make_planted_source(const PlantedSpec& spec);

struct SweepRow {
  std::size_t depth = 0;
  std::string region;
  Split split = Split::Test;
  double accuracy = 0.0;  // mean over seeds
};

struct SweepRegion {
  std::string name;
  std::vector<bool> mask;
};

/// Trains one conventional GNN per depth 0..max_depth on the whole graph and
/// reports its accuracy on each region's `split` nodes, averaged over seeds.
/// Rows are ordered by depth, then region.
std::vector<SweepRow> depth_sweep(const Graph& g, std::span<const SweepRegion> regions, std::size_t max_depth,
                                  Flavor flavor, const TrainConfig& cfg, std::span<const std::uint64_t> seeds,
                                  Split split = Split::Test);

std::string sweep_csv(const std::vector<SweepRow>& rows);

std::string_view split_name(Split s);

}  // namespace admp
