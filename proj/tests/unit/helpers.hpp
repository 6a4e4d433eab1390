#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include <openqs/linalg.hpp>

namespace testutil {

using namespace openqs;

inline double dist(const Mat& a, const Mat& b) { return max_abs(a - b); }
inline double dist(const SuperOperator& a, const SuperOperator& b) { return max_abs(a.matrix() - b.matrix()); }

inline Mat plus_state() {
  Mat psi(2, 1);
  psi << 1.0, 1.0;
  return projector(psi / std::sqrt(2.0));
}

inline Mat diag(const std::vector<cplx>& d) {
  Mat a = Mat::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  for (size_t i = 0; i < d.size(); ++i) a(i, i) = d[i];
  return a;
}

inline double slope(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }

inline bool near(double x, double target, double tol) { return std::abs(x - target) <= tol; }

}  // namespace testutil
