#pragma once

#include <stdexcept>
#include <string>

namespace admp {

/// Malformed or inconsistent input data (bad files, out-of-range ids, checksum mismatch).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or divergence during a numerical routine.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace admp
