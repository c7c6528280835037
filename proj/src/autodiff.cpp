#include "admp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "admp/errors.hpp"

namespace admp::ad {

namespace {

void add_into(Matrix& dst, const Matrix& src) {
  auto& d = dst.data();
  const auto& s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::invalid_argument("Tape: invalid variable handle");
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return node(v).value(); }

const Matrix* Tape::grad(Var v) const {
  const auto& n = node(v);
  return n.grad.empty() ? nullptr : &n.grad;
}

Var Tape::push(Node n, const char* op_name) {
  if (!n.value().all_finite()) throw NumericalError(std::string("non-finite value produced by ") + op_name);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  Node n(Op::Parameter);
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = !p.frozen;
  return push(std::move(n), "parameter");
}

Var Tape::constant(const Matrix& m) {
  Node n(Op::Constant);
  n.external = &m;
  return push(std::move(n), "constant");
}

Var Tape::matmul(Var a, Var b) {
  Node n(Op::MatMul, a, b);
  n.own = admp::matmul(value(a), value(b));
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n), "matmul");
}

Var Tape::spmm(const NormAdjacency& adj, Var x) {
  Node n(Op::SpMM, x);
  n.adj = &adj;
  n.own = admp::spmm(adj, value(x));
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n), "spmm");
}

Var Tape::add_bias(Var x, Var bias) {
  const Matrix& xv = value(x);
  const Matrix& bv = value(bias);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) throw std::invalid_argument("add_bias: bias must be 1 x cols");
  Node n(Op::AddBias, x, bias);
  n.own = xv;
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto row = n.own.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bv(0, j);
  }
  n.requires_grad = node(x).requires_grad || node(bias).requires_grad;
  return push(std::move(n), "add_bias");
}

Var Tape::relu(Var x) {
  Node n(Op::Relu, x);
  n.own = value(x);
  for (double& v : n.own.data()) v = v > 0.0 ? v : 0.0;
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n), "relu");
}

Var Tape::dropout(Var x, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: probability must be in [0, 1)");
  if (mode == Mode::Eval || p == 0.0) return x;
  const Matrix& xv = value(x);
  Node n(Op::Dropout, x);
  n.aux = Matrix(xv.rows(), xv.cols());
  n.own = Matrix(xv.rows(), xv.cols());
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double keep = rng.uniform() >= p ? scale : 0.0;
    n.aux.data()[i] = keep;
    n.own.data()[i] = xv.data()[i] * keep;
  }
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n), "dropout");
}

Var Tape::log_softmax_rows(Var x) {
  const Matrix& xv = value(x);
  Node n(Op::LogSoftmax, x);
  n.own = Matrix(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto in = xv.row(r);
    auto out = n.own.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (double v : in) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] - lse;
  }
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n), "log_softmax_rows");
}

Var Tape::masked_ce_mean(Var logprobs, std::span<const int> labels, const std::vector<bool>& mask) {
  const Matrix& lp = value(logprobs);
  if (labels.size() != lp.rows() || mask.size() != lp.rows())
    throw std::invalid_argument("masked_ce_mean: labels/mask length does not match rows");
  Node n(Op::MaskedCE, logprobs);
  double total = 0.0;
  for (std::size_t v = 0; v < lp.rows(); ++v) {
    if (!mask[v]) continue;
    const int y = labels[v];
    if (y < 0 || static_cast<std::size_t>(y) >= lp.cols()) throw std::invalid_argument("masked_ce_mean: label out of range");
    n.rows.push_back(v);
    n.targets.push_back(y);
    total -= lp(v, static_cast<std::size_t>(y));
  }
  if (n.rows.empty()) throw std::invalid_argument("masked_ce_mean: mask selects no nodes");
  n.own = Matrix(1, 1, total / static_cast<double>(n.rows.size()));
  n.requires_grad = node(logprobs).requires_grad;
  return push(std::move(n), "masked_ce_mean");
}

Var Tape::sum_all(Var x) {
  Node n(Op::SumAll, x);
  double s = 0.0;
  for (double v : value(x).data()) s += v;
  n.own = Matrix(1, 1, s);
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n), "sum_all");
}

Var Tape::add(Var a, Var b) {
  if (!value(a).same_shape(value(b))) throw std::invalid_argument("add: shape mismatch");
  Node n(Op::Add, a, b);
  n.own = value(a);
  add_into(n.own, value(b));
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n), "add");
}

Var Tape::gin_combine(const NormAdjacency& adj, Var h, Var eps) {
  const Matrix& ev = value(eps);
  if (ev.rows() != 1 || ev.cols() != 1) throw std::invalid_argument("gin_combine: eps must be 1x1");
  Node n(Op::GinCombine, h, eps);
  n.adj = &adj;
  n.own = admp::spmm(adj, value(h));
  const double self = 1.0 + ev(0, 0);
  const auto& hv = value(h).data();
  auto& o = n.own.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += self * hv[i];
  n.requires_grad = node(h).requires_grad || node(eps).requires_grad;
  return push(std::move(n), "gin_combine");
}

void Tape::accumulate(Var target, const Matrix& g) {
  Node& t = nodes_[target.id];
  if (!t.requires_grad) return;
  if (t.grad.empty()) {
    t.grad = g;
  } else {
    add_into(t.grad, g);
  }
}

void Tape::backward(Var loss) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw std::invalid_argument("backward: loss must be a scalar");
  for (auto& n : nodes_) n.grad = Matrix();
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad = Matrix(1, 1, 1.0);

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::Parameter: {
        Parameter& p = *n.param;
        if (p.grad.same_shape(p.value)) {
          add_into(p.grad, g);
        } else {
          p.grad = g;
        }
        break;
      }
      case Op::Constant:
        break;
      case Op::MatMul:
        if (nodes_[n.a.id].requires_grad) accumulate(n.a, matmul_transpose_b(g, value(n.b)));
        if (nodes_[n.b.id].requires_grad) accumulate(n.b, matmul_transpose_a(value(n.a), g));
        break;
      case Op::SpMM:
        // Both operator kinds are symmetric, so Aᵀ·g = A·g.
        accumulate(n.a, admp::spmm(*n.adj, g));
        break;
      case Op::AddBias: {
        accumulate(n.a, g);
        if (nodes_[n.b.id].requires_grad) {
          Matrix gb(1, g.cols());
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(r, j);
          accumulate(n.b, gb);
        }
        break;
      }
      case Op::Relu: {
        Matrix gx = g;
        const auto& out = n.own.data();
        for (std::size_t k = 0; k < out.size(); ++k)
          if (!(out[k] > 0.0)) gx.data()[k] = 0.0;
        accumulate(n.a, gx);
        break;
      }
      case Op::Dropout: {
        Matrix gx = g;
        for (std::size_t k = 0; k < gx.size(); ++k) gx.data()[k] *= n.aux.data()[k];
        accumulate(n.a, gx);
        break;
      }
      case Op::LogSoftmax: {
        Matrix gx(g.rows(), g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto gr = g.row(r);
          double s = 0.0;
          for (double v : gr) s += v;
          auto out = n.own.row(r);
          auto dst = gx.row(r);
          for (std::size_t j = 0; j < gr.size(); ++j) dst[j] = gr[j] - std::exp(out[j]) * s;
        }
        accumulate(n.a, gx);
        break;
      }
      case Op::MaskedCE: {
        const Matrix& lp = value(n.a);
        Matrix gx(lp.rows(), lp.cols());
        const double w = -g(0, 0) / static_cast<double>(n.rows.size());
        for (std::size_t k = 0; k < n.rows.size(); ++k)
          gx(n.rows[k], static_cast<std::size_t>(n.targets[k])) += w;
        accumulate(n.a, gx);
        break;
      }
      case Op::SumAll: {
        const Matrix& xv = value(n.a);
        accumulate(n.a, Matrix(xv.rows(), xv.cols(), g(0, 0)));
        break;
      }
      case Op::Add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::GinCombine: {
        const double self = 1.0 + value(n.b)(0, 0);
        if (nodes_[n.a.id].requires_grad) {
          Matrix gh = admp::spmm(*n.adj, g);
          for (std::size_t k = 0; k < gh.size(); ++k) gh.data()[k] += self * g.data()[k];
          accumulate(n.a, gh);
        }
        if (nodes_[n.b.id].requires_grad) {
          double s = 0.0;
          const auto& hv = value(n.a).data();
          for (std::size_t k = 0; k < hv.size(); ++k) s += g.data()[k] * hv[k];
          accumulate(n.b, Matrix(1, 1, s));
        }
        break;
      }
    }
  }
}

}  // namespace admp::ad
