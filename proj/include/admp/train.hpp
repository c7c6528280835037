#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "admp/autodiff.hpp"
#include "admp/graph.hpp"
#include "admp/model.hpp"

namespace admp {

enum class Paradigm {
  Alm,     // joint training on the summed per-exit loss
  St,      // one exit at a time, earlier groups frozen
  Single,  // conventional single-task training of the deepest exit only
};

std::string_view paradigm_name(Paradigm p);
Paradigm parse_paradigm(std::string_view name);

struct TrainConfig {
  Paradigm paradigm = Paradigm::St;
  std::size_t epochs = 200;  // per stage for ST, total for ALM / Single
  double lr = 0.01;
  double dropout = 0.5;
  std::size_t hidden = 64;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  std::size_t patience = 50;
};

/// Per-dataset hidden size, learning rate and dropout (matched case-insensitively on the
/// manifest name). Unknown names get the TrainConfig defaults.
TrainConfig preset_config(std::string_view dataset);

/// Adam with bias correction. Frozen parameters are skipped entirely: no moment
/// update and no write to the value.
class Adam {
public:
  Adam(std::vector<ad::Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
       double weight_decay = 0.0);

  void step();
  void zero_grad();
  std::size_t steps() const { return t_; }

private:
  struct Slot {
    ad::Parameter* param;
    Matrix m, v;
  };
  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
};

/// Patience-based stopping on a monitored accuracy; strict improvement resets the counter.
class EarlyStopper {
public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Feeds the accuracy of the next epoch; returns true when training should stop.
  bool update(double accuracy);
  bool improved_last() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based, 0 before any update
  double best() const { return best_; }
  std::size_t epochs_seen() const { return epoch_; }

private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = -1.0;
  bool improved_ = false;
};

/// CRC-32 of the parameter's little-endian value bytes.
std::uint32_t parameter_checksum(const ad::Parameter& p);

struct StageRecord {
  std::size_t stage = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double final_train_loss = 0.0;
  std::vector<double> best_val_accuracy;  // per exit monitored in this stage (index = layer)
  std::vector<std::string> trained;       // parameter names updated in this stage
  std::vector<std::pair<std::string, std::uint32_t>> frozen_before;
  std::vector<std::pair<std::string, std::uint32_t>> frozen_after;

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

struct StageLedger {
  std::vector<StageRecord> stages;
  friend bool operator==(const StageLedger&, const StageLedger&) = default;
};

struct EpochMetric {
  std::size_t stage = 0;
  std::size_t epoch = 0;  // 1-based
  std::size_t layer = 0;
  Split split = Split::Train;
  double accuracy = 0.0;
  double loss = 0.0;  // training loss of the epoch
};

struct TrainResult {
  StageLedger ledger;
  std::vector<EpochMetric> metrics;
};

/// Invoked after each completed stage with the stage index and the parameters at that point.
using StageCallback = std::function<void(std::size_t, const AdmpParams&)>;

/// Aggregate-loss training: one run over sum_l CE(p^(l)) with every parameter trainable.
/// Early stopping monitors the mean validation accuracy over exits.
TrainResult train_alm(AdmpParams& params, const Graph& g, const NormAdjacency& adj, const TrainConfig& cfg);

/// Sequential training: stage t optimizes CE(p^(t)) over stage_group(t) with
/// every other parameter frozen, then freezes the group. After stage L all groups are frozen.
TrainResult train_st(AdmpParams& params, const Graph& g, const NormAdjacency& adj, const TrainConfig& cfg,
                     const StageCallback& on_stage = {});

/// Conventional L-layer GNN training on CE(p^(L)) only (the depth-sweep baseline).
TrainResult train_single(AdmpParams& params, const Graph& g, const NormAdjacency& adj, const TrainConfig& cfg);

/// Dispatches on cfg.paradigm.
TrainResult train(AdmpParams& params, const Graph& g, const NormAdjacency& adj, const TrainConfig& cfg);

}  // namespace admp
