#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "tforms/common.hpp"

namespace oracles {

// closed-form eigenvalues of a 2x2 Hermitian [[a, w],[conj w, b]] from the
// characteristic polynomial
inline std::pair<double, double> herm2_eigenvalues(double a, double b, tforms::Complex w) {
  const double mean = 0.5 * (a + b);
  const double disc = std::sqrt(0.25 * (a - b) * (a - b) + std::norm(w));
  return {mean - disc, mean + disc};
}

// slope of log(value) vs log(rank) over the smallest entries; for a field
// vanishing to order p the slope is p
inline double small_value_slope(std::vector<double> values, int take = 64) {
  std::sort(values.begin(), values.end());
  std::vector<double> lx, ly;
  for (int k = 0; k < take && k < static_cast<int>(values.size()); ++k) {
    if (values[static_cast<std::size_t>(k)] <= 0.0) continue;
    lx.push_back(std::log(static_cast<double>(k) + 1.0));
    ly.push_back(std::log(values[static_cast<std::size_t>(k)]));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double n = static_cast<double>(lx.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracles
