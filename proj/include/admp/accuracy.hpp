#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "admp/matrix.hpp"

namespace admp {

/// Index of the row maximum; ties go to the lowest class id.
std::size_t argmax_row(std::span<const double> row);

/// Fraction of masked rows whose argmax equals the label. Throws std::invalid_argument on an empty mask.
double masked_accuracy(const Matrix& probs, std::span<const int> labels, const std::vector<bool>& mask);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

}  // namespace admp
