#include "admp/accuracy.hpp"

#include <cmath>
#include <stdexcept>

namespace admp {

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

double masked_accuracy(const Matrix& probs, std::span<const int> labels, const std::vector<bool>& mask) {
  if (labels.size() != probs.rows() || mask.size() != probs.rows())
    throw std::invalid_argument("masked_accuracy: labels/mask length does not match rows");
  std::size_t total = 0, hit = 0;
  for (std::size_t v = 0; v < probs.rows(); ++v) {
    if (!mask[v]) continue;
    ++total;
    if (static_cast<int>(argmax_row(probs.row(v))) == labels[v]) ++hit;
  }
  if (total == 0) throw std::invalid_argument("masked_accuracy: empty mask");
  return static_cast<double>(hit) / static_cast<double>(total);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double s = 0.0;
  for (double v : values) s += v;
  const double mean = s / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

}  // namespace admp
