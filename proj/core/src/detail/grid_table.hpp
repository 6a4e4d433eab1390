#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "openqs/linalg.hpp"

namespace openqs::detail {

// Matrix samples on a uniform grid j * delta; linear interpolation in between,
// clamped to the last node.
struct GridTable {
  double delta = 0.0;
  std::vector<Mat> values;

  void eval(double t, Mat& out) const {
    const double x = t / delta;
    long i = static_cast<long>(std::floor(x + 1e-7));
    const long last = static_cast<long>(values.size()) - 1;
    if (i >= last) {
      out = values.back();
      return;
    }
    i = std::max(0L, i);
    const double f = x - static_cast<double>(i);
    if (std::abs(f) < 1e-7) {
      out = values[static_cast<size_t>(i)];
    } else {
      out = (1.0 - f) * values[static_cast<size_t>(i)] + f * values[static_cast<size_t>(i + 1)];
    }
  }
};

}  // namespace openqs::detail
