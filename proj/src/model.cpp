#include "admp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "admp/binary_io.hpp"
#include "admp/errors.hpp"

namespace admp {

std::string_view flavor_name(Flavor f) { return f == Flavor::Gcn ? "gcn" : "gin"; }

Flavor parse_flavor(std::string_view name) {
  if (name == "gcn") return Flavor::Gcn;
  if (name == "gin") return Flavor::Gin;
  throw std::invalid_argument("unknown flavor '" + std::string(name) + "' (expected gcn or gin)");
}

AdjacencyKind adjacency_for(Flavor f) {
  return f == Flavor::Gcn ? AdjacencyKind::GcnSymmetric : AdjacencyKind::RawSum;
}

namespace {

ad::Parameter glorot(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
  ad::Parameter p{.name = std::move(name), .value = Matrix(rows, cols)};
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : p.value.data()) v = rng.uniform(-limit, limit);
  p.zero_grad();
  return p;
}

ad::Parameter zeros(std::string name, std::size_t rows, std::size_t cols) {
  ad::Parameter p{.name = std::move(name), .value = Matrix(rows, cols)};
  p.zero_grad();
  return p;
}

}  // namespace

AdmpParams AdmpParams::init(const ModelShape& shape, std::uint64_t seed) {
  if (shape.in_dim == 0 || shape.classes == 0) throw std::invalid_argument("model needs in_dim > 0 and classes > 0");
  if (shape.layers >= 2 && shape.hidden == 0) throw std::invalid_argument("model needs hidden > 0 when L >= 2");
  AdmpParams p;
  p.shape = shape;
  p.seed = seed;
  Rng rng(seed);
  const std::size_t L = shape.layers;
  for (std::size_t l = 1; l < L; ++l) {
    p.weight.push_back(glorot("theta_" + std::to_string(l) + ".weight", shape.width(l - 1), shape.hidden, rng));
    p.bias.push_back(zeros("theta_" + std::to_string(l) + ".bias", 1, shape.hidden));
  }
  for (std::size_t l = 0; l <= L; ++l)
    p.exit.push_back(glorot("exit_" + std::to_string(l), shape.width(l == 0 ? 0 : l - 1), shape.classes, rng));
  if (shape.flavor == Flavor::Gin)
    for (std::size_t l = 1; l <= L; ++l) p.eps.push_back(zeros("eps_" + std::to_string(l), 1, 1));
  return p;
}

std::vector<ad::Parameter*> AdmpParams::all() {
  std::vector<ad::Parameter*> out;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.push_back(&weight[i]);
    out.push_back(&bias[i]);
  }
  for (auto& e : exit) out.push_back(&e);
  for (auto& e : eps) out.push_back(&e);
  return out;
}

std::vector<const ad::Parameter*> AdmpParams::all() const {
  auto mut = const_cast<AdmpParams*>(this)->all();
  return {mut.begin(), mut.end()};
}

std::vector<ad::Parameter*> AdmpParams::stage_group(std::size_t l) {
  if (l > shape.layers) throw std::out_of_range("stage_group: layer beyond L");
  std::vector<ad::Parameter*> out;
  if (l >= 2) {
    out.push_back(&weight[l - 2]);
    out.push_back(&bias[l - 2]);
  }
  if (l >= 1 && !eps.empty()) out.push_back(&eps[l - 1]);
  out.push_back(&exit[l]);
  return out;
}

void AdmpParams::set_frozen(bool frozen) {
  for (auto* p : all()) p->frozen = frozen;
}

namespace {

void check_inputs(const AdmpParams& params, const Graph& g, const NormAdjacency& adj) {
  if (adj.kind != adjacency_for(params.shape.flavor))
    throw std::invalid_argument("forward: adjacency kind does not match model flavor");
  if (adj.n != g.num_nodes()) throw std::invalid_argument("forward: adjacency size does not match graph");
  if (g.num_features() != params.shape.in_dim)
    throw std::invalid_argument("forward: graph has " + std::to_string(g.num_features()) + " features, model expects " +
                                std::to_string(params.shape.in_dim));
}

struct TapedState {
  TapedForward out;
  std::vector<ad::Var> hidden;
  std::vector<ad::Var> messages;
};

TapedState run_taped(ad::Tape& tape, AdmpParams& params, const Graph& g, const NormAdjacency& adj,
                     const ForwardOptions& opts, Rng& rng) {
  check_inputs(params, g, adj);
  const std::size_t L = params.layers();
  const std::size_t last = std::min(opts.max_exit, L);
  auto wanted = [&](std::size_t l) { return opts.want.empty() || (l < opts.want.size() && opts.want[l]); };

  TapedState st;
  st.out.log_probs.resize(L + 1);
  const ad::Var x = tape.constant(g.features());
  st.hidden.push_back(x);
  st.messages.push_back(x);
  try {
    if (wanted(0)) st.out.log_probs[0] = tape.log_softmax_rows(tape.matmul(x, tape.parameter(params.exit[0])));
  } catch (const NumericalError& e) {
    throw NumericalError("layer 0: " + std::string(e.what()));
  }

  ad::Var h = x;
  for (std::size_t l = 1; l <= last; ++l) {
    try {
      const ad::Var dropped = tape.dropout(h, opts.dropout, opts.mode, rng);
      const ad::Var m = params.shape.flavor == Flavor::Gcn
                            ? tape.spmm(adj, dropped)
                            : tape.gin_combine(adj, dropped, tape.parameter(params.eps[l - 1]));
      st.messages.push_back(m);
      if (wanted(l)) st.out.log_probs[l] = tape.log_softmax_rows(tape.matmul(m, tape.parameter(params.exit[l])));
      if (l < last) {
        h = tape.relu(tape.add_bias(tape.matmul(m, tape.parameter(params.weight[l - 1])),
                                    tape.parameter(params.bias[l - 1])));
        st.hidden.push_back(h);
      }
    } catch (const NumericalError& e) {
      throw NumericalError("layer " + std::to_string(l) + ": " + e.what());
    }
  }
  return st;
}

Matrix exp_rows(const Matrix& logp) {
  Matrix p = logp;
  for (double& v : p.data()) v = std::exp(v);
  return p;
}

}  // namespace

TapedForward forward_taped(ad::Tape& tape, AdmpParams& params, const Graph& g, const NormAdjacency& adj,
                           const ForwardOptions& opts, Rng& rng) {
  return run_taped(tape, params, g, adj, opts, rng).out;
}

ForwardOutput forward(const AdmpParams& params, const Graph& g, const NormAdjacency& adj, ad::Mode mode,
                      double dropout, std::uint64_t seed) {
  // The tape only reads parameter values here; no backward pass is run.
  auto& mut = const_cast<AdmpParams&>(params);
  ad::Tape tape;
  Rng rng(seed);
  ForwardOptions opts{.mode = mode, .dropout = dropout};
  const TapedState st = run_taped(tape, mut, g, adj, opts, rng);
  ForwardOutput out;
  for (auto v : st.hidden) out.hidden.push_back(tape.value(v));
  for (auto v : st.messages) out.messages.push_back(tape.value(v));
  for (auto v : st.out.log_probs) out.probs.push_back(exp_rows(tape.value(v)));
  return out;
}

StandardGnn extract_standard_gnn(const AdmpParams& params, std::size_t depth) {
  if (depth > params.layers()) throw std::out_of_range("extract_standard_gnn: depth beyond L");
  StandardGnn net;
  net.flavor = params.shape.flavor;
  net.depth = depth;
  for (std::size_t l = 1; l < depth; ++l) {
    net.weights.push_back(params.weight[l - 1].value);
    net.biases.push_back(params.bias[l - 1].value);
  }
  if (net.flavor == Flavor::Gin)
    for (std::size_t l = 1; l <= depth; ++l) net.eps.push_back(params.eps[l - 1].value(0, 0));
  net.classifier = params.exit[depth].value;
  return net;
}

namespace {

Matrix dropout_plain(const Matrix& x, double p, ad::Mode mode, Rng& rng) {
  if (mode == ad::Mode::Eval || p == 0.0) return x;
  Matrix out(x.rows(), x.cols());
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] * (rng.uniform() >= p ? scale : 0.0);
  return out;
}

Matrix softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto in = z.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (double v : in) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < in.size(); ++j) out(r, j) = std::exp(in[j] - lse);
  }
  return out;
}

}  // namespace

Matrix standard_gnn_probs(const StandardGnn& net, const Graph& g, const NormAdjacency& adj, ad::Mode mode,
                          double dropout, Rng& rng) {
  if (net.depth == 0) return softmax_rows(matmul(g.features(), net.classifier));
  Matrix h = g.features();
  for (std::size_t l = 1; l <= net.depth; ++l) {
    const Matrix dropped = dropout_plain(h, dropout, mode, rng);
    Matrix m = spmm(adj, dropped);
    if (net.flavor == Flavor::Gin) {
      const double self = 1.0 + net.eps[l - 1];
      for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] += self * dropped.data()[i];
    }
    if (l == net.depth) return softmax_rows(matmul(m, net.classifier));
    h = matmul(m, net.weights[l - 1]);
    const Matrix& b = net.biases[l - 1];
    for (std::size_t r = 0; r < h.rows(); ++r)
      for (std::size_t j = 0; j < h.cols(); ++j) h(r, j) = std::max(h(r, j) + b(0, j), 0.0);
  }
  return {};
}

void save_checkpoint(const AdmpParams& params, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<unsigned char> blob;
  std::ostringstream manifest;
  manifest << "format=admp-checkpoint\nversion=1\n"
           << "flavor=" << flavor_name(params.shape.flavor) << "\n"
           << "layers=" << params.shape.layers << "\n"
           << "in_dim=" << params.shape.in_dim << "\n"
           << "hidden=" << params.shape.hidden << "\n"
           << "classes=" << params.shape.classes << "\n"
           << "seed=" << params.seed << "\n";
  for (const ad::Parameter* p : params.all()) {
    manifest << "param=" << p->name << " " << p->value.rows() << " " << p->value.cols() << "\n";
    for (double v : p->value.data()) io::put_le(blob, v);
  }
  manifest << "params_bytes=" << blob.size() << "\nparams_crc32=" << io::crc32(blob) << "\n";
  io::write_file(dir / "params.bin", blob);
  io::write_text(dir / "manifest.txt", manifest.str());
}

AdmpParams load_checkpoint(const std::filesystem::path& dir) {
  const auto kv = io::parse_manifest(io::read_text(dir / "manifest.txt"));
  if (io::manifest_get(kv, "format") != "admp-checkpoint") throw DataError(dir.string() + " is not a checkpoint");
  ModelShape shape;
  try {
    shape.flavor = parse_flavor(io::manifest_get(kv, "flavor"));
    shape.layers = std::stoul(io::manifest_get(kv, "layers"));
    shape.in_dim = std::stoul(io::manifest_get(kv, "in_dim"));
    shape.hidden = std::stoul(io::manifest_get(kv, "hidden"));
    shape.classes = std::stoul(io::manifest_get(kv, "classes"));
  } catch (const std::invalid_argument& e) {
    throw DataError("bad checkpoint manifest: " + std::string(e.what()));
  }
  AdmpParams params = AdmpParams::init(shape, std::stoull(io::manifest_get(kv, "seed")));
  const auto blob = io::read_file(dir / "params.bin");
  if (std::to_string(blob.size()) != io::manifest_get(kv, "params_bytes") ||
      std::to_string(io::crc32(blob)) != io::manifest_get(kv, "params_crc32"))
    throw DataError("checkpoint payload does not match its manifest (size or checksum)");

  std::vector<std::string> declared;
  for (const auto& [k, v] : kv)
    if (k == "param") declared.push_back(v);
  auto slots = params.all();
  if (declared.size() != slots.size()) throw DataError("checkpoint parameter count does not match its shape");
  std::size_t off = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    ad::Parameter& p = *slots[i];
    const std::string expect =
        p.name + " " + std::to_string(p.value.rows()) + " " + std::to_string(p.value.cols());
    if (declared[i] != expect) throw DataError("checkpoint parameter '" + declared[i] + "' expected '" + expect + "'");
    for (double& v : p.value.data()) {
      v = io::get_le<double>(blob.data() + off);
      off += sizeof(double);
    }
  }
  if (off != blob.size()) throw DataError("checkpoint payload has trailing bytes");
  return params;
}

}  // namespace admp
