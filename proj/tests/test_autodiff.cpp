#include <cmath>
#include <numeric>

#include "admp/autodiff.hpp"
#include "admp/errors.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace admp;
using ad::Mode;
using ad::Parameter;
using ad::Tape;

namespace {

Parameter param(const char* name, Matrix m) { return Parameter{name, std::move(m), {}, false}; }

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-1, 1);
  return m;
}

// Cross-entropy computed directly from logits, no tape involved.
double ce_reference(const Matrix& logits, const std::vector<int>& y, const std::vector<bool>& mask) {
  double s = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    double mx = -INFINITY;
    for (double v : logits.row(i)) mx = std::max(mx, v);
    double z = 0;
    for (double v : logits.row(i)) z += std::exp(v - mx);
    s -= logits(i, static_cast<std::size_t>(y[i])) - mx - std::log(z);
    ++k;
  }
  return s / static_cast<double>(k);
}

}  // namespace

TEST_CASE("matmul with identity") {
  Rng rng(1);
  const Matrix b = random_matrix(2, 3, rng);
  const Matrix eye = Matrix::identity(2);
  Tape t;
  CHECK(t.value(t.matmul(t.constant(eye), t.constant(b))) == b);
}

TEST_CASE("gradient of a linear form") {
  Parameter a = param("a", Matrix(1, 2, {1, 2}));
  const Matrix b(2, 1, {3, 4});
  a.zero_grad();
  Tape t;
  t.backward(t.sum_all(t.matmul(t.parameter(a), t.constant(b))));
  CHECK(a.grad(0, 0) == 3.0);
  CHECK(a.grad(0, 1) == 4.0);
}

TEST_CASE("sum of a parameter has an all-ones gradient") {
  Parameter w = param("w", Matrix(2, 2, {0.3, -1, 2, 5}));
  w.zero_grad();
  Tape t;
  t.backward(t.sum_all(t.parameter(w)));
  CHECK(w.grad == Matrix(2, 2, 1.0));
}

TEST_CASE("matmul then cross-entropy matches finite differences") {
  Rng rng(2);
  Parameter a = param("a", random_matrix(5, 4, rng));
  Parameter b = param("b", random_matrix(4, 3, rng));
  const std::vector<int> y{0, 2, 1, 1, 0};
  const std::vector<bool> mask(5, true);
  a.zero_grad();
  b.zero_grad();
  Tape t;
  t.backward(t.masked_ce_mean(t.log_softmax_rows(t.matmul(t.parameter(a), t.parameter(b))), y, mask));
  auto f = [&] { return ce_reference(testing::dense_product(a.value, b.value), y, mask); };
  CHECK(testing::relative_error(a.grad, testing::finite_difference(a.value, f)) < 1e-6);
  CHECK(testing::relative_error(b.grad, testing::finite_difference(b.value, f)) < 1e-6);
}

TEST_CASE("uniform logits give ln c cross-entropy") {
  const Matrix logits(4, 7, 0.25);
  const std::vector<int> y{0, 3, 6, 2};
  const std::vector<bool> mask{true, true, false, true};
  Tape t;
  const double ce = t.value(t.masked_ce_mean(t.log_softmax_rows(t.constant(logits)), y, mask))(0, 0);
  CHECK(ce == doctest::Approx(std::log(7.0)).epsilon(1e-14));
  CHECK(ce == doctest::Approx(1.9459).epsilon(1e-4));
}

TEST_CASE("masked cross-entropy on an empty mask is an error") {
  Tape t;
  const Matrix lp(2, 2);
  CHECK_THROWS(t.masked_ce_mean(t.constant(lp), std::vector<int>{0, 1}, std::vector<bool>{false, false}));
}

TEST_CASE("dropout is the identity at p=0 and in eval mode") {
  Rng rng(3);
  const Matrix x = random_matrix(6, 5, rng);
  for (Mode mode : {Mode::Train, Mode::Eval}) {
    Tape t;
    Rng r(9);
    CHECK(t.value(t.dropout(t.constant(x), 0.0, mode, r)) == x);
  }
  Tape t;
  Rng r(9);
  CHECK(t.value(t.dropout(t.constant(x), 0.7, Mode::Eval, r)) == x);
  CHECK(r.next() == Rng(9).next());  // no draws consumed
  CHECK_THROWS(t.dropout(t.constant(x), 1.0, Mode::Train, r));
}

TEST_CASE("train-mode dropout zeroes or rescales each entry") {
  const Matrix x(40, 10, 1.0);
  Tape t;
  Rng r(4);
  const Matrix& y = t.value(t.dropout(t.constant(x), 0.25, Mode::Train, r));
  std::size_t kept = 0;
  for (double v : y.data()) {
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
    kept += v != 0.0;
  }
  CHECK(kept > 250);
  CHECK(kept < 350);
}

TEST_CASE("log-softmax rows exponentiate to one") {
  Rng rng(5);
  Matrix x = random_matrix(10, 6, rng);
  x(3, 2) = 800.0;  // overflow guard
  Tape t;
  const Matrix& lp = t.value(t.log_softmax_rows(t.constant(x)));
  for (std::size_t i = 0; i < 10; ++i) {
    double s = 0;
    for (double v : lp.row(i)) s += std::exp(v);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("composite graph pipeline matches finite differences and respects frozen leaves") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Graph g = testing::random_graph(6, 0.5, 4, 3, seed);
    const NormAdjacency adj = normalize(g, AdjacencyKind::GcnSymmetric);
    Rng rng(seed + 11);
    Parameter w1 = param("w1", random_matrix(4, 5, rng));
    Parameter b1 = param("b1", random_matrix(1, 5, rng));
    Parameter w2 = param("w2", random_matrix(5, 3, rng));
    Parameter eps = param("eps", Matrix(1, 1, 0.3));
    Parameter frozen = param("frozen", random_matrix(4, 4, rng));
    frozen.frozen = true;
    const NormAdjacency raw = normalize(g, AdjacencyKind::RawSum);
    const Matrix x = g.features();
    const std::vector<bool> mask(6, true);

    auto build = [&](Tape& t) {
      ad::Var h = t.matmul(t.constant(x), t.parameter(frozen));
      h = t.gin_combine(raw, h, t.parameter(eps));
      h = t.relu(t.add_bias(t.matmul(t.spmm(adj, h), t.parameter(w1)), t.parameter(b1)));
      const ad::Var logits = t.matmul(t.spmm(adj, h), t.parameter(w2));
      return t.masked_ce_mean(t.log_softmax_rows(logits), g.labels(), mask);
    };
    // Reference evaluation from dense products only.
    auto f = [&] {
      const Matrix a = normalize(g, AdjacencyKind::GcnSymmetric).to_dense();
      const Matrix r = testing::dense_adjacency(g);
      Matrix h = testing::dense_product(x, frozen.value);
      const Matrix nb = testing::dense_product(r, h);
      for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = (1 + eps.value(0, 0)) * h.data()[i] + nb.data()[i];
      h = testing::dense_product(testing::dense_product(a, h), w1.value);
      for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) = std::max(0.0, h(i, j) + b1.value(0, j));
      return ce_reference(testing::dense_product(testing::dense_product(a, h), w2.value), g.labels(), mask);
    };

    for (Parameter* p : {&w1, &b1, &w2, &eps, &frozen}) p->zero_grad();
    Tape t;
    const ad::Var loss = build(t);
    CHECK(t.value(loss)(0, 0) == doctest::Approx(f()).epsilon(1e-12));
    t.backward(loss);
    for (Parameter* p : {&w1, &b1, &w2, &eps})
      CHECK(testing::relative_error(p->grad, testing::finite_difference(p->value, f)) < 1e-5);
    CHECK(frozen.grad == Matrix(4, 4));
  }
}

TEST_CASE("backward needs a scalar loss") {
  Parameter w = param("w", Matrix(2, 2, 1.0));
  Tape t;
  const ad::Var v = t.parameter(w);
  CHECK_THROWS(t.backward(v));
}

TEST_CASE("non-finite forward values are reported") {
  Matrix x(1, 2, {std::numeric_limits<double>::infinity(), 0.0});
  Tape t;
  CHECK_THROWS_AS(t.relu(t.constant(x)), NumericalError);
}
