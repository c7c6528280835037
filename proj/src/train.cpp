#include "admp/train.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "admp/accuracy.hpp"
#include "admp/binary_io.hpp"
#include "admp/errors.hpp"

namespace admp {

std::string_view paradigm_name(Paradigm p) {
  switch (p) {
    case Paradigm::Alm: return "alm";
    case Paradigm::St: return "st";
    case Paradigm::Single: return "single";
  }
  return "?";
}

Paradigm parse_paradigm(std::string_view name) {
  if (name == "alm") return Paradigm::Alm;
  if (name == "st") return Paradigm::St;
  if (name == "single") return Paradigm::Single;
  throw std::invalid_argument("unknown paradigm '" + std::string(name) + "' (expected alm, st or single)");
}

TrainConfig preset_config(std::string_view dataset) {
  struct Preset {
    const char* name;
    std::size_t hidden;
    double lr, dropout;
  };
  static constexpr Preset kPresets[] = {
      {"cora", 64, 0.01, 0.8},  {"citeseer", 64, 0.01, 0.4}, {"pubmed", 64, 0.01, 0.2},
      {"cs", 512, 0.01, 0.4},   {"genius", 512, 0.01, 0.2},  {"ogbn-arxiv", 512, 0.01, 0.5},
  };
  std::string key(dataset);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  TrainConfig cfg;
  for (const auto& p : kPresets)
    if (key == p.name) {
      cfg.hidden = p.hidden;
      cfg.lr = p.lr;
      cfg.dropout = p.dropout;
    }
  return cfg;
}

Adam::Adam(std::vector<ad::Parameter*> params, double lr, double beta1, double beta2, double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
  if (!(lr > 0.0)) throw std::invalid_argument("Adam: learning rate must be positive");
  for (auto* p : params) {
    slots_.push_back({p, Matrix(p->value.rows(), p->value.cols()), Matrix(p->value.rows(), p->value.cols())});
    if (!p->grad.same_shape(p->value)) p->zero_grad();
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& s : slots_) {
    ad::Parameter& p = *s.param;
    if (p.frozen) continue;
    auto& w = p.value.data();
    const auto& g = p.grad.data();
    auto& m = s.m.data();
    auto& v = s.v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + weight_decay_ * w[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& s : slots_) s.param->zero_grad();
}

bool EarlyStopper::update(double accuracy) {
  ++epoch_;
  improved_ = accuracy > best_;
  if (improved_) {
    best_ = accuracy;
    best_epoch_ = epoch_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  return since_best_ >= patience_;
}

std::uint32_t parameter_checksum(const ad::Parameter& p) {
  std::vector<unsigned char> bytes;
  bytes.reserve(p.value.size() * sizeof(double));
  for (double v : p.value.data()) io::put_le(bytes, v);
  return io::crc32(bytes);
}

namespace {

struct StagePlan {
  std::size_t stage = 0;
  std::vector<ad::Parameter*> trainable;
  std::size_t max_exit = 0;
  std::vector<std::size_t> loss_exits;
  std::vector<std::size_t> monitor_exits;
};

std::vector<bool> exit_mask(std::size_t L, const std::vector<std::size_t>& exits) {
  std::vector<bool> want(L + 1, false);
  for (auto l : exits) want[l] = true;
  return want;
}

std::vector<std::pair<std::string, std::uint32_t>> frozen_checksums(AdmpParams& params) {
  std::vector<std::pair<std::string, std::uint32_t>> out;
  for (const ad::Parameter* p : params.all())
    if (p->frozen) out.emplace_back(p->name, parameter_checksum(*p));
  return out;
}

std::uint64_t dropout_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

StageRecord run_stage(AdmpParams& params, const Graph& g, const NormAdjacency& adj, const TrainConfig& cfg,
                      const StagePlan& plan, Rng& rng, std::vector<EpochMetric>& metrics) {
  if (cfg.epochs == 0) throw std::invalid_argument("train: epochs must be >= 1");
  const std::size_t L = params.layers();
  params.set_frozen(true);
  for (auto* p : plan.trainable) p->frozen = false;

  StageRecord rec;
  rec.stage = plan.stage;
  for (auto* p : plan.trainable) rec.trained.push_back(p->name);
  rec.frozen_before = frozen_checksums(params);
  rec.best_val_accuracy.assign(L + 1, 0.0);

  Adam opt(plan.trainable, cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay);
  opt.zero_grad();
  EarlyStopper stopper(cfg.patience);
  std::vector<Matrix> best_values;
  for (auto* p : plan.trainable) best_values.push_back(p->value);

  const ForwardOptions train_opts{.mode = ad::Mode::Train, .dropout = cfg.dropout, .max_exit = plan.max_exit,
                                  .want = exit_mask(L, plan.loss_exits)};
  const ForwardOptions eval_opts{.mode = ad::Mode::Eval, .dropout = 0.0, .max_exit = plan.max_exit,
                                 .want = exit_mask(L, plan.monitor_exits)};
  const auto& labels = g.labels();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_value = 0.0;
    std::vector<double> val_acc(L + 1, 0.0);
    try {
      ad::Tape tape;
      const auto fwd = forward_taped(tape, params, g, adj, train_opts, rng);
      ad::Var loss;
      for (auto l : plan.loss_exits) {
        const ad::Var ce = tape.masked_ce_mean(fwd.log_probs[l], labels, g.mask(Split::Train));
        loss = loss.valid() ? tape.add(loss, ce) : ce;
      }
      loss_value = tape.value(loss)(0, 0);
      tape.backward(loss);
      opt.step();
      opt.zero_grad();

      ad::Tape eval_tape;
      Rng unused(0);
      const auto ev = forward_taped(eval_tape, params, g, adj, eval_opts, unused);
      for (auto l : plan.monitor_exits) {
        Matrix probs = eval_tape.value(ev.log_probs[l]);
        for (double& v : probs.data()) v = std::exp(v);
        for (Split s : {Split::Train, Split::Val, Split::Test}) {
          const auto& mask = g.mask(s);
          if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) continue;
          const double acc = masked_accuracy(probs, labels, mask);
          metrics.push_back({plan.stage, epoch, l, s, acc, loss_value});
          if (s == Split::Val) val_acc[l] = acc;
        }
      }
    } catch (const NumericalError& e) {
      throw NumericalError("stage " + std::to_string(plan.stage) + ", epoch " + std::to_string(epoch) + ": " +
                           e.what());
    }

    double monitored = 0.0;
    for (auto l : plan.monitor_exits) monitored += val_acc[l];
    monitored /= static_cast<double>(plan.monitor_exits.size());
    const bool stop = stopper.update(monitored);
    rec.final_train_loss = loss_value;
    rec.epochs_run = epoch;
    if (stopper.improved_last()) {
      for (std::size_t i = 0; i < plan.trainable.size(); ++i) best_values[i] = plan.trainable[i]->value;
      for (auto l : plan.monitor_exits) rec.best_val_accuracy[l] = val_acc[l];
    }
    if (stop) break;
  }
  for (std::size_t i = 0; i < plan.trainable.size(); ++i) plan.trainable[i]->value = best_values[i];
  rec.best_epoch = stopper.best_epoch();
  rec.frozen_after = frozen_checksums(params);
  return rec;
}

void require_train_nodes(const Graph& g) {
  const auto& m = g.mask(Split::Train);
  if (std::none_of(m.begin(), m.end(), [](bool b) { return b; }))
    throw std::invalid_argument("train: graph has no training nodes");
}

}  // namespace

TrainResult train_alm(AdmpParams& params, const Graph& g, const NormAdjacency& adj, const TrainConfig& cfg) {
  require_train_nodes(g);
  TrainResult result;
  Rng rng(dropout_seed(cfg.seed));
  const std::size_t L = params.layers();
  StagePlan plan{.stage = 0, .trainable = params.all(), .max_exit = L};
  for (std::size_t l = 0; l <= L; ++l) {
    plan.loss_exits.push_back(l);
    plan.monitor_exits.push_back(l);
  }
  result.ledger.stages.push_back(run_stage(params, g, adj, cfg, plan, rng, result.metrics));
  params.set_frozen(false);
  return result;
}

TrainResult train_st(AdmpParams& params, const Graph& g, const NormAdjacency& adj, const TrainConfig& cfg,
                     const StageCallback& on_stage) {
  require_train_nodes(g);
  TrainResult result;
  Rng rng(dropout_seed(cfg.seed));
  for (std::size_t t = 0; t <= params.layers(); ++t) {
    StagePlan plan{.stage = t, .trainable = params.stage_group(t), .max_exit = t, .loss_exits = {t},
                   .monitor_exits = {t}};
    result.ledger.stages.push_back(run_stage(params, g, adj, cfg, plan, rng, result.metrics));
    if (on_stage) on_stage(t, params);
  }
  params.set_frozen(true);
  return result;
}

TrainResult train_single(AdmpParams& params, const Graph& g, const NormAdjacency& adj, const TrainConfig& cfg) {
  require_train_nodes(g);
  TrainResult result;
  Rng rng(dropout_seed(cfg.seed));
  const std::size_t L = params.layers();
  StagePlan plan{.stage = 0, .max_exit = L, .loss_exits = {L}, .monitor_exits = {L}};
  for (std::size_t l = 0; l <= L; ++l)
    for (auto* p : params.stage_group(l))
      if (l == L || p != &params.exit[l]) plan.trainable.push_back(p);
  result.ledger.stages.push_back(run_stage(params, g, adj, cfg, plan, rng, result.metrics));
  params.set_frozen(false);
  return result;
}

TrainResult train(AdmpParams& params, const Graph& g, const NormAdjacency& adj, const TrainConfig& cfg) {
  switch (cfg.paradigm) {
    case Paradigm::Alm: return train_alm(params, g, adj, cfg);
    case Paradigm::St: return train_st(params, g, adj, cfg);
    case Paradigm::Single: return train_single(params, g, adj, cfg);
  }
  throw std::invalid_argument("train: unknown paradigm");
}

}  // namespace admp
