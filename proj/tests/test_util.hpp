#pragma once

// Shared fixtures for the unit and acceptance suites: random graphs and
// oracles that do not go through the code paths they are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "admp/accuracy.hpp"
#include "admp/autodiff.hpp"
#include "admp/graph.hpp"
#include "admp/model.hpp"
#include "admp/rng.hpp"

namespace admp::testing {

/// G(n, p) with Gaussian-ish features, random labels and a 40/30/30 split.
inline Graph random_graph(std::size_t n, double p, std::size_t d, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (rng.uniform() < p) edges.emplace_back(u, v);
  Matrix x(n, d);
  for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
  std::vector<int> y(n);
  SplitMasks m{std::vector<bool>(n), std::vector<bool>(n), std::vector<bool>(n)};
  for (std::size_t v = 0; v < n; ++v) {
    y[v] = static_cast<int>(v % c);  // every class present
    const double r = rng.uniform();
    (r < 0.4 ? m.train : r < 0.7 ? m.val : m.test)[v] = true;
  }
  m.train[0] = true;
  m.val[0] = m.test[0] = false;
  return build_graph(edges, std::move(x), std::move(y), std::move(m), c);
}

inline std::vector<NodeId> random_permutation(std::size_t n, Rng& rng) {
  std::vector<NodeId> p(n);
  std::iota(p.begin(), p.end(), NodeId{0});
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

/// Dense adjacency from neighbor lists.
inline Matrix dense_adjacency(const Graph& g) {
  Matrix a(g.num_nodes(), g.num_nodes());
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v : g.neighbors(u)) a(u, v) = 1.0;
  return a;
}

/// Plain triple-loop product.
inline Matrix dense_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

/// Central finite differences of `f` w.r.t. every entry of `x` (x is restored).
inline Matrix finite_difference(Matrix& x, const std::function<double()>& f, double step = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + step;
    const double up = f();
    x.data()[i] = saved - step;
    const double down = f();
    x.data()[i] = saved;
    g.data()[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const Matrix& a, const Matrix& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
    na += a.data()[i] * a.data()[i];
    nb += b.data()[i] * b.data()[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Aggregate loss sum_l mean_{train} -log p^(l)[y] evaluated through the
/// standalone per-depth networks (no tape).
inline double alm_loss_reference(const AdmpParams& params, const Graph& g, const NormAdjacency& adj) {
  double total = 0.0;
  for (std::size_t l = 0; l <= params.layers(); ++l) {
    Rng unused(0);
    const Matrix p = standard_gnn_probs(extract_standard_gnn(params, l), g, adj, ad::Mode::Eval, 0.0, unused);
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      if (!g.mask(Split::Train)[v]) continue;
      s -= std::log(p(v, static_cast<std::size_t>(g.labels()[v])));
      ++k;
    }
    total += s / static_cast<double>(k);
  }
  return total;
}

/// Gradient of the ALM loss from the tape, filled into each Parameter::grad.
inline double alm_loss_taped(AdmpParams& params, const Graph& g, const NormAdjacency& adj) {
  for (auto* p : params.all()) p->zero_grad();
  ad::Tape tape;
  Rng rng(0);
  const auto fwd = forward_taped(tape, params, g, adj, {}, rng);
  ad::Var loss;
  for (auto lp : fwd.log_probs) {
    const ad::Var ce = tape.masked_ce_mean(lp, g.labels(), g.mask(Split::Train));
    loss = loss.valid() ? tape.add(loss, ce) : ce;
  }
  tape.backward(loss);
  return tape.value(loss)(0, 0);
}

/// Worst relative error over all parameters between tape and finite-difference gradients.
inline double alm_gradient_error(AdmpParams& params, const Graph& g, const NormAdjacency& adj) {
  alm_loss_taped(params, g, adj);
  double worst = 0.0;
  for (auto* p : params.all()) {
    const Matrix analytic = p->grad;
    const Matrix numeric = finite_difference(p->value, [&] { return alm_loss_reference(params, g, adj); });
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

/// Random parameters with non-trivial eps for GIN.
inline AdmpParams random_params(const ModelShape& shape, std::uint64_t seed) {
  AdmpParams p = AdmpParams::init(shape, seed);
  Rng rng(seed + 7);
  for (auto& b : p.bias)
    for (double& v : b.value.data()) v = rng.uniform(-0.3, 0.3);
  for (auto& e : p.eps) e.value(0, 0) = rng.uniform(-0.4, 0.4);
  return p;
}

}  // namespace admp::testing
