#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "admp/centrality.hpp"
#include "admp/matrix.hpp"

namespace admp {

/// Per-exit class probabilities: layers[l] is the N x c matrix p^(l).
struct PredictionCube {
  std::vector<Matrix> layers;

  std::size_t num_exits() const { return layers.size(); }
  std::size_t num_nodes() const { return layers.empty() ? 0 : layers.front().rows(); }
  std::size_t predicted(std::size_t node, std::size_t layer) const;
};

/// Accuracy of each exit's argmax on the masked nodes.
std::vector<double> per_layer_accuracy(const PredictionCube& cube, std::span<const int> labels,
                                       const std::vector<bool>& mask);

/// Fraction of test nodes that some exit classifies correctly.
double oracle_accuracy(const PredictionCube& cube, std::span<const int> labels, const std::vector<bool>& test_mask);

struct ExitPolicy {
  Metric metric = Metric::KCore;
  BucketAssignment assignment;
  std::vector<std::size_t> exit_layer;  // per bucket
};

/// Picks, per bucket, the exit with the best validation accuracy among the
/// bucket's validation nodes (ties to the smaller layer). Buckets without
/// validation nodes fall back to the globally best validation exit.
/// Only labels of nodes in `val_mask` are read.
ExitPolicy learn_policy(const PredictionCube& cube, std::span<const int> labels, const std::vector<bool>& val_mask,
                        const BucketAssignment& assignment, Metric metric);

struct ExitTraceRow {
  std::size_t node = 0;
  std::size_t bucket = 0;
  std::size_t exit_layer = 0;
  std::size_t predicted = 0;
  int truth = 0;
};

struct PolicyEvaluation {
  double accuracy = 0.0;
  std::vector<ExitTraceRow> trace;
};

/// Classifies every masked node at its bucket's exit.
PolicyEvaluation apply_policy(const PredictionCube& cube, const ExitPolicy& policy, const std::vector<bool>& mask,
                              std::span<const int> labels);

/// Learns one policy per candidate bucket count and keeps the one with the
/// highest validation accuracy (ties to the smaller count).
ExitPolicy tune_policy(const PredictionCube& cube, std::span<const int> labels, const std::vector<bool>& val_mask,
                       const CentralityVector& cv, std::span<const std::size_t> bucket_counts);

/// Plain-text policy manifest: metric, clusters, boundaries (rank indices), exit layers.
void save_policy(const ExitPolicy& policy, const std::filesystem::path& file);
/// Reloads a policy; bucket membership is recomputed from `cv` and the stored cut points.
ExitPolicy load_policy(const std::filesystem::path& file, const CentralityVector& cv);

std::string exit_trace_csv(const std::vector<ExitTraceRow>& trace);

}  // namespace admp
