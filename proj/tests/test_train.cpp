#include <cmath>
#include <map>

#include "admp/accuracy.hpp"
#include "admp/train.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace admp;

namespace {

ad::Parameter scalar(double v, double g) { return {"s", Matrix(1, 1, v), Matrix(1, 1, g), false}; }

TrainConfig small_config(std::uint64_t seed, std::size_t epochs = 15) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.hidden = 6;
  cfg.dropout = 0.3;
  cfg.seed = seed;
  cfg.patience = 5;
  return cfg;
}

AdmpParams fresh(const Graph& g, Flavor f, std::size_t L, const TrainConfig& cfg) {
  return AdmpParams::init({f, L, g.num_features(), cfg.hidden, g.num_classes()}, cfg.seed);
}

std::vector<Matrix> values(const AdmpParams& p) {
  std::vector<Matrix> out;
  for (const auto* q : p.all()) out.push_back(q->value);
  return out;
}

}  // namespace

TEST_CASE("first Adam step moves by lr") {
  ad::Parameter p = scalar(1.0, 1.0);
  Adam opt({&p}, 0.01);
  opt.step();
  // m̂ = 1, v̂ = 1 after bias correction, so the step is lr / (1 + eps)
  CHECK(p.value(0, 0) - 1.0 == doctest::Approx(-0.01 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(opt.steps() == 1);
}

TEST_CASE("Adam leaves parameters alone on zero gradients and when frozen") {
  ad::Parameter z = scalar(0.7, 0.0);
  ad::Parameter f = scalar(0.7, 5.0);
  f.frozen = true;
  Adam opt({&z, &f}, 0.1);
  for (int i = 0; i < 3; ++i) opt.step();
  CHECK(z.value(0, 0) == 0.7);
  CHECK(f.value(0, 0) == 0.7);
}

TEST_CASE("Adam weight decay is added to the gradient") {
  ad::Parameter p = scalar(2.0, 0.0);
  Adam opt({&p}, 0.01, 0.9, 0.999, 1e-8, 0.5);
  opt.step();
  CHECK(p.value(0, 0) < 2.0);
}

TEST_CASE("early stopping") {
  SUBCASE("monotone improvement runs to the budget") {
    EarlyStopper s(3);
    for (int e = 1; e <= 50; ++e) CHECK_FALSE(s.update(e * 0.01));
    CHECK(s.best_epoch() == 50);
  }
  SUBCASE("flat accuracy with patience 10 stops at epoch 11") {
    EarlyStopper s(10);
    std::size_t stopped = 0;
    for (std::size_t e = 1; e <= 100 && !stopped; ++e)
      if (s.update(0.5)) stopped = e;
    CHECK(stopped == 11);
    CHECK(s.best_epoch() == 1);
  }
  SUBCASE("best epoch is the first strict maximum") {
    EarlyStopper s(2);
    const double seq[] = {0.5, 0.6, 0.6, 0.6, 0.6};
    std::size_t stopped = 0;
    for (std::size_t e = 0; e < 5 && !stopped; ++e)
      if (s.update(seq[e])) stopped = e + 1;
    CHECK(stopped == 4);
    CHECK(s.best_epoch() == 2);
  }
}

TEST_CASE("sequential training restores the best weights of each stage") {
  const Graph g = testing::random_graph(30, 0.2, 5, 3, 4);
  const NormAdjacency adj = normalize(g, AdjacencyKind::GcnSymmetric);
  TrainConfig cfg = small_config(1, 30);
  cfg.patience = 3;
  AdmpParams p = fresh(g, Flavor::Gcn, 2, cfg);
  const TrainResult r = train_st(p, g, adj, cfg);
  const auto probs = forward(p, g, adj, ad::Mode::Eval, 0, 0).probs;
  for (const auto& st : r.ledger.stages) {
    CHECK(st.best_epoch >= 1);
    CHECK(st.best_epoch <= st.epochs_run);
    CHECK(masked_accuracy(probs[st.stage], g.labels(), g.mask(Split::Val)) ==
          doctest::Approx(st.best_val_accuracy[st.stage]).epsilon(1e-15));
  }
}

TEST_CASE("frozen groups keep their checksums through later stages") {
  for (Flavor f : {Flavor::Gcn, Flavor::Gin}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Graph g = testing::random_graph(25, 0.2, 4, 3, seed);
      const NormAdjacency adj = normalize(g, adjacency_for(f));
      const TrainConfig cfg = small_config(seed);
      AdmpParams p = fresh(g, f, 3, cfg);
      std::map<std::string, std::uint32_t> frozen_at;
      std::map<std::string, std::size_t> frozen_stage;
      const TrainResult r = train_st(p, g, adj, cfg, [&](std::size_t t, const AdmpParams& q) {
        for (const auto* x : const_cast<AdmpParams&>(q).stage_group(t)) {
          frozen_at[x->name] = parameter_checksum(*x);
          frozen_stage[x->name] = t;
        }
      });
      REQUIRE(r.ledger.stages.size() == 4);
      for (const auto& st : r.ledger.stages) {
        CHECK(st.frozen_before == st.frozen_after);
        for (const auto& [name, crc] : st.frozen_after)
          if (frozen_stage.at(name) < st.stage) CHECK(frozen_at[name] == crc);
      }
      // every group trained in exactly one stage
      std::map<std::string, int> trained;
      for (const auto& st : r.ledger.stages)
        for (const auto& n : st.trained) ++trained[n];
      CHECK(trained.size() == p.all().size());
      for (const auto& [n, c] : trained) CHECK(c == 1);
      for (const auto* x : p.all()) {
        CHECK(x->frozen);
        CHECK(parameter_checksum(*x) == frozen_at[x->name]);
      }
    }
  }
}

TEST_CASE("layer-0 exit after stage 0 is final") {
  const Graph g = testing::random_graph(25, 0.2, 4, 3, 7);
  const NormAdjacency adj = normalize(g, AdjacencyKind::GcnSymmetric);
  const TrainConfig cfg = small_config(3);
  AdmpParams p = fresh(g, Flavor::Gcn, 3, cfg);
  Matrix after_stage0;
  train_st(p, g, adj, cfg, [&](std::size_t t, const AdmpParams& q) {
    if (t == 0) after_stage0 = forward(q, g, adj, ad::Mode::Eval, 0, 0).probs[0];
  });
  CHECK(forward(p, g, adj, ad::Mode::Eval, 0, 0).probs[0] == after_stage0);
}

TEST_CASE("with no hidden layers the two paradigms coincide") {
  const Graph g = testing::random_graph(25, 0.2, 4, 3, 2);
  const NormAdjacency adj = normalize(g, AdjacencyKind::GcnSymmetric);
  const TrainConfig cfg = small_config(5);
  AdmpParams a = fresh(g, Flavor::Gcn, 0, cfg);
  AdmpParams b = fresh(g, Flavor::Gcn, 0, cfg);
  const TrainResult ra = train_alm(a, g, adj, cfg);
  const TrainResult rb = train_st(b, g, adj, cfg);
  CHECK(values(a) == values(b));
  CHECK(ra.ledger == rb.ledger);
  REQUIRE(ra.metrics.size() == rb.metrics.size());
  for (std::size_t i = 0; i < ra.metrics.size(); ++i) {
    CHECK(ra.metrics[i].accuracy == rb.metrics[i].accuracy);
    CHECK(ra.metrics[i].loss == rb.metrics[i].loss);
  }
}

TEST_CASE("aggregate loss at depth zero is the plain cross-entropy") {
  const Graph g = testing::random_graph(20, 0.2, 4, 3, 6);
  const NormAdjacency adj = normalize(g, AdjacencyKind::GcnSymmetric);
  AdmpParams p = testing::random_params({Flavor::Gcn, 0, 4, 3, 3}, 2);
  const Matrix probs = forward(p, g, adj, ad::Mode::Eval, 0, 0).probs[0];
  double ce = 0;
  std::size_t k = 0;
  for (std::size_t v = 0; v < 20; ++v)
    if (g.mask(Split::Train)[v]) {
      ce -= std::log(probs(v, static_cast<std::size_t>(g.labels()[v])));
      ++k;
    }
  CHECK(testing::alm_loss_taped(p, g, adj) == doctest::Approx(ce / static_cast<double>(k)).epsilon(1e-12));
}

TEST_CASE("training is deterministic for a seed") {
  for (Paradigm par : {Paradigm::Alm, Paradigm::St, Paradigm::Single}) {
    const Graph g = testing::random_graph(25, 0.2, 4, 3, 1);
    const NormAdjacency adj = normalize(g, AdjacencyKind::RawSum);
    TrainConfig cfg = small_config(9);
    cfg.paradigm = par;
    AdmpParams a = fresh(g, Flavor::Gin, 2, cfg);
    AdmpParams b = fresh(g, Flavor::Gin, 2, cfg);
    const auto ra = train(a, g, adj, cfg);
    const auto rb = train(b, g, adj, cfg);
    CHECK(values(a) == values(b));
    CHECK(ra.ledger == rb.ledger);
  }
}

TEST_CASE("training reduces the loss on a learnable problem") {
  const Graph g = testing::random_graph(40, 0.15, 6, 2, 10);
  // make labels a linear function of the features
  std::vector<int> y(40);
  for (std::size_t v = 0; v < 40; ++v) y[v] = g.features()(v, 0) + g.features()(v, 1) > 0 ? 1 : 0;
  const Graph h = build_graph(g.edge_list(), g.features(), y, g.masks(), 2);
  const NormAdjacency adj = normalize(h, AdjacencyKind::GcnSymmetric);
  TrainConfig cfg = small_config(0, 100);
  cfg.dropout = 0.0;
  cfg.patience = 100;
  AdmpParams p = fresh(h, Flavor::Gcn, 0, cfg);
  const auto r = train_alm(p, h, adj, cfg);
  CHECK(r.metrics.front().loss > r.metrics.back().loss);
  const auto probs = forward(p, h, adj, ad::Mode::Eval, 0, 0).probs[0];
  CHECK(masked_accuracy(probs, h.labels(), h.mask(Split::Train)) > 0.85);
}

TEST_CASE("paradigm names") {
  CHECK(parse_paradigm("st") == Paradigm::St);
  CHECK(parse_paradigm(paradigm_name(Paradigm::Alm)) == Paradigm::Alm);
  CHECK_THROWS(parse_paradigm("joint"));
}
