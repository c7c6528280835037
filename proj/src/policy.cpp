#include "admp/policy.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "admp/accuracy.hpp"
#include "admp/binary_io.hpp"
#include "admp/errors.hpp"

namespace admp {

std::size_t PredictionCube::predicted(std::size_t node, std::size_t layer) const {
  return argmax_row(layers.at(layer).row(node));
}

std::vector<double> per_layer_accuracy(const PredictionCube& cube, std::span<const int> labels,
                                       const std::vector<bool>& mask) {
  std::vector<double> out;
  for (const auto& p : cube.layers) out.push_back(masked_accuracy(p, labels, mask));
  return out;
}

double oracle_accuracy(const PredictionCube& cube, std::span<const int> labels, const std::vector<bool>& test_mask) {
  std::size_t total = 0, hit = 0;
  for (std::size_t v = 0; v < cube.num_nodes(); ++v) {
    if (!test_mask[v]) continue;
    ++total;
    for (std::size_t l = 0; l < cube.num_exits(); ++l) {
      if (static_cast<int>(cube.predicted(v, l)) == labels[v]) {
        ++hit;
        break;
      }
    }
  }
  if (total == 0) throw std::invalid_argument("oracle_accuracy: empty test set");
  return static_cast<double>(hit) / static_cast<double>(total);
}

ExitPolicy learn_policy(const PredictionCube& cube, std::span<const int> labels, const std::vector<bool>& val_mask,
                        const BucketAssignment& assignment, Metric metric) {
  const std::size_t n_exits = cube.num_exits();
  const std::size_t C = assignment.n_buckets;
  if (n_exits == 0) throw std::invalid_argument("learn_policy: empty prediction cube");
  if (assignment.bucket_of.size() != cube.num_nodes() || val_mask.size() != cube.num_nodes())
    throw std::invalid_argument("learn_policy: assignment/mask do not cover the cube's nodes");

  // correct[c][l]: validation nodes of bucket c classified correctly at exit l.
  std::vector<std::vector<std::size_t>> correct(C, std::vector<std::size_t>(n_exits, 0));
  std::vector<std::size_t> count(C, 0);
  std::vector<std::size_t> global(n_exits, 0);
  std::size_t total = 0;
  for (std::size_t v = 0; v < cube.num_nodes(); ++v) {
    if (!val_mask[v]) continue;
    const std::size_t c = assignment.bucket_of[v];
    ++count[c];
    ++total;
    for (std::size_t l = 0; l < n_exits; ++l) {
      if (static_cast<int>(cube.predicted(v, l)) == labels[v]) {
        ++correct[c][l];
        ++global[l];
      }
    }
  }
  if (total == 0) throw std::invalid_argument("learn_policy: no validation nodes");

  auto best_of = [](const std::vector<std::size_t>& hits) {
    return static_cast<std::size_t>(std::max_element(hits.begin(), hits.end()) - hits.begin());
  };
  ExitPolicy policy{metric, assignment, std::vector<std::size_t>(C)};
  const std::size_t fallback = best_of(global);
  for (std::size_t c = 0; c < C; ++c) policy.exit_layer[c] = count[c] == 0 ? fallback : best_of(correct[c]);
  return policy;
}

PolicyEvaluation apply_policy(const PredictionCube& cube, const ExitPolicy& policy, const std::vector<bool>& mask,
                              std::span<const int> labels) {
  if (policy.exit_layer.size() != policy.assignment.n_buckets)
    throw std::invalid_argument("apply_policy: policy does not cover every bucket");
  PolicyEvaluation ev;
  std::size_t hit = 0;
  for (std::size_t v = 0; v < cube.num_nodes(); ++v) {
    if (!mask[v]) continue;
    const std::size_t b = policy.assignment.bucket_of[v];
    const std::size_t l = policy.exit_layer[b];
    if (l >= cube.num_exits()) throw std::invalid_argument("apply_policy: exit layer beyond the cube depth");
    const std::size_t pred = cube.predicted(v, l);
    if (static_cast<int>(pred) == labels[v]) ++hit;
    ev.trace.push_back({v, b, l, pred, labels[v]});
  }
  ev.accuracy = ev.trace.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(ev.trace.size());
  return ev;
}

ExitPolicy tune_policy(const PredictionCube& cube, std::span<const int> labels, const std::vector<bool>& val_mask,
                       const CentralityVector& cv, std::span<const std::size_t> bucket_counts) {
  if (bucket_counts.empty()) throw std::invalid_argument("tune_policy: no candidate bucket counts");
  std::vector<std::size_t> counts(bucket_counts.begin(), bucket_counts.end());
  std::sort(counts.begin(), counts.end());
  ExitPolicy best;
  double best_acc = -1.0;
  for (std::size_t C : counts) {
    ExitPolicy p = learn_policy(cube, labels, val_mask, bucketize(cv, C, val_mask), cv.metric);
    const double acc = apply_policy(cube, p, val_mask, labels).accuracy;
    if (acc > best_acc) {
      best_acc = acc;
      best = std::move(p);
    }
  }
  return best;
}

namespace {

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream s;
  for (std::size_t i = 0; i < xs.size(); ++i) s << (i ? "," : "") << xs[i];
  return s.str();
}

std::vector<std::size_t> split_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoul(tok));
    } catch (const std::exception&) {
      throw DataError("policy file: bad integer '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

void save_policy(const ExitPolicy& policy, const std::filesystem::path& file) {
  std::ostringstream s;
  s << "format=admp-policy\nversion=1\n"
    << "metric=" << metric_name(policy.metric) << "\n"
    << "clusters=" << policy.assignment.n_buckets << "\n"
    << "n_nodes=" << policy.assignment.bucket_of.size() << "\n"
    << "boundaries=" << join(policy.assignment.boundaries) << "\n"
    << "exit_layers=" << join(policy.exit_layer) << "\n";
  io::write_text(file, s.str());
}

ExitPolicy load_policy(const std::filesystem::path& file, const CentralityVector& cv) {
  const auto kv = io::parse_manifest(io::read_text(file));
  if (io::manifest_get(kv, "format") != "admp-policy") throw DataError(file.string() + " is not a policy file");
  ExitPolicy p;
  p.metric = parse_metric(io::manifest_get(kv, "metric"));
  if (p.metric != cv.metric) throw DataError("policy metric does not match the supplied centrality");
  if (std::stoul(io::manifest_get(kv, "n_nodes")) != cv.values.size())
    throw DataError("policy was learned on a graph with a different node count");
  p.assignment = bucketize_with_boundaries(cv, split_sizes(io::manifest_get(kv, "boundaries")));
  p.exit_layer = split_sizes(io::manifest_get(kv, "exit_layers"));
  if (p.exit_layer.size() != p.assignment.n_buckets ||
      std::stoul(io::manifest_get(kv, "clusters")) != p.assignment.n_buckets)
    throw DataError("policy file: cluster count, boundaries and exit layers disagree");
  return p;
}

std::string exit_trace_csv(const std::vector<ExitTraceRow>& trace) {
  std::ostringstream s;
  s << "node,bucket,exit_layer,predicted,true\n";
  for (const auto& r : trace) s << r.node << "," << r.bucket << "," << r.exit_layer << "," << r.predicted << "," << r.truth << "\n";
  return s.str();
}

}  // namespace admp
