#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "admp/graph.hpp"
#include "admp/matrix.hpp"
#include "admp/rng.hpp"

namespace admp::ad {

/// A trainable leaf. `grad` accumulates across backward calls until zero_grad();
/// frozen parameters never receive gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool frozen = false;

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

enum class Mode { Train, Eval };

/// Handle to a tape entry.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

/// Reverse-mode tape over the closed op set used by the layer stack.
///
/// Entries are appended in execution order, so the tape is topologically
/// sorted by construction and backward() simply walks it in reverse.
/// Constants, parameters and sparse operators are held by pointer and must
/// outlive the tape. Every op checks its output for non-finite values.
class Tape {
public:
  Var parameter(Parameter& p);
  Var constant(const Matrix& m);

  Var matmul(Var a, Var b);
  Var spmm(const NormAdjacency& adj, Var x);
  Var add_bias(Var x, Var bias);
  Var relu(Var x);
  /// Inverted dropout: kept entries scaled by 1/(1-p). Identity (same Var) in
  /// eval mode or when p == 0; no random draws are consumed then.
  Var dropout(Var x, double p, Mode mode, Rng& rng);
  Var log_softmax_rows(Var x);
  /// Mean over masked rows of -logprobs[v, labels[v]]; 1×1 result.
  Var masked_ce_mean(Var logprobs, std::span<const int> labels, const std::vector<bool>& mask);
  Var sum_all(Var x);
  Var add(Var a, Var b);
  /// (1 + eps)·h + A·h with eps a 1×1 parameter (sum aggregation with self term).
  Var gin_combine(const NormAdjacency& adj, Var h, Var eps);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  /// Gradient of the last backward() target w.r.t. `v`, or nullptr if none reached it.
  const Matrix* grad(Var v) const;

  /// Propagates d(loss)/d(·) to every entry; parameter leaves accumulate into Parameter::grad.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

private:
  enum class Op { Parameter, Constant, MatMul, SpMM, AddBias, Relu, Dropout, LogSoftmax, MaskedCE, SumAll, Add, GinCombine };

  struct Node {
    explicit Node(Op o, Var x = {}, Var y = {}) : op(o), a(x), b(y) {}

    Op op;
    Var a, b;
    bool requires_grad = false;
    Matrix own;
    const Matrix* external = nullptr;
    Parameter* param = nullptr;
    const NormAdjacency* adj = nullptr;
    Matrix aux;                      // dropout scale mask
    std::vector<std::size_t> rows;   // CE masked rows
    std::vector<int> targets;        // CE labels of masked rows
    Matrix grad;

    const Matrix& value() const { return external ? *external : own; }
  };

  Var push(Node node, const char* op_name);
  const Node& node(Var v) const;
  void accumulate(Var target, const Matrix& g);

  std::vector<Node> nodes_;
};

}  // namespace admp::ad
