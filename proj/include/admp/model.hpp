#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "admp/autodiff.hpp"
#include "admp/graph.hpp"
#include "admp/matrix.hpp"
#include "admp/rng.hpp"

namespace admp {

enum class Flavor { Gcn, Gin };

std::string_view flavor_name(Flavor f);
Flavor parse_flavor(std::string_view name);
/// GCN aggregates with the symmetric-normalized operator, GIN with the raw sum.
AdjacencyKind adjacency_for(Flavor f);

struct ModelShape {
  Flavor flavor = Flavor::Gcn;
  std::size_t layers = 0;   // L, maximum depth
  std::size_t in_dim = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;

  /// Width of h^(l): in_dim for l = 0, hidden afterwards.
  std::size_t width(std::size_t l) const { return l == 0 ? in_dim : hidden; }
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Parameters of the multi-exit stack.
///
/// Layer l >= 1 aggregates h^(l-1) into m^(l); its exit head reads m^(l)
/// (width of h^(l-1)) and its continuation maps m^(l) to h^(l). Only
/// h^(1)..h^(L-1) feed a later exit, so continuation weights exist for
/// l = 1..L-1 and `weight[l-1]`, `bias[l-1]` produce h^(l).
/// GIN adds a learnable self weight eps_l for every aggregation l = 1..L.
struct AdmpParams {
  ModelShape shape;
  std::uint64_t seed = 0;
  std::vector<ad::Parameter> exit;    // W~(0..L), width(max(l-1,0)) x classes
  std::vector<ad::Parameter> weight;  // theta_1..theta_{L-1}
  std::vector<ad::Parameter> bias;    // 1 x hidden each
  std::vector<ad::Parameter> eps;     // GIN only, 1x1 each, index l-1

  /// Glorot-uniform weights, zero biases and eps; deterministic in `seed`.
  static AdmpParams init(const ModelShape& shape, std::uint64_t seed);

  std::size_t layers() const { return shape.layers; }

  /// Every parameter in checkpoint order.
  std::vector<ad::Parameter*> all();
  std::vector<const ad::Parameter*> all() const;

  /// Parameters that first influence prediction l: W~(l), theta_{l-1} (l >= 2), eps_l (GIN, l >= 1).
  std::vector<ad::Parameter*> stage_group(std::size_t l);

  void set_frozen(bool frozen);
};

struct ForwardOutput {
  std::vector<Matrix> hidden;    // h^(0) = X, h^(1)..h^(L-1)
  std::vector<Matrix> messages;  // m^(0) = X, m^(1)..m^(L)
  std::vector<Matrix> probs;     // p^(0)..p^(L), N x c each
};

/// Log-probabilities recorded on a tape; entries for exits that were not requested stay invalid.
struct TapedForward {
  std::vector<ad::Var> log_probs;
};

struct ForwardOptions {
  ad::Mode mode = ad::Mode::Eval;
  double dropout = 0.0;
  /// Deepest exit to evaluate; layers beyond it are not run. Defaults to L.
  std::size_t max_exit = static_cast<std::size_t>(-1);
  /// If non-empty, only exits with want[l] set produce log-probabilities.
  std::vector<bool> want;
};

/// Records the stack on `tape`. Dropout masks are drawn from `rng` for the
/// inputs of layers 1, 2, ... in order, so a truncated or standalone model
/// driven by the same generator state sees the same masks.
TapedForward forward_taped(ad::Tape& tape, AdmpParams& params, const Graph& g, const NormAdjacency& adj,
                           const ForwardOptions& opts, Rng& rng);

/// Plain forward returning hidden states, messages and per-exit probabilities.
ForwardOutput forward(const AdmpParams& params, const Graph& g, const NormAdjacency& adj, ad::Mode mode,
                      double dropout, std::uint64_t seed);

/// A conventional l-layer GNN: l-1 hidden updates followed by an aggregation and a linear classifier.
struct StandardGnn {
  Flavor flavor = Flavor::Gcn;
  std::size_t depth = 0;
  std::vector<Matrix> weights;  // depth-1 hidden updates
  std::vector<Matrix> biases;
  std::vector<double> eps;      // GIN, one per aggregation
  Matrix classifier;
};

StandardGnn extract_standard_gnn(const AdmpParams& params, std::size_t depth);

/// Class probabilities of a standalone GNN, computed without the tape.
Matrix standard_gnn_probs(const StandardGnn& net, const Graph& g, const NormAdjacency& adj, ad::Mode mode,
                          double dropout, Rng& rng);

/// Checkpoint directory: manifest.txt (flavor, L, dims, seed, parameter table)
/// and params.bin (little-endian fp64 blobs in AdmpParams::all() order).
void save_checkpoint(const AdmpParams& params, const std::filesystem::path& dir);
AdmpParams load_checkpoint(const std::filesystem::path& dir);

}  // namespace admp
