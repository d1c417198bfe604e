#pragma once

// Small order-statistic helpers shared by the library sources.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace hsdetect::detail {

// Median of a non-empty sample; reorders the input.
inline double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  double upper = *mid;
  if (n % 2) return upper;
  double lower = *std::max_element(v.begin(), mid);
  return lower + (upper - lower) / 2.0;
}

// Median absolute deviation about `center`; reorders nothing in the input.
inline double mad(const std::vector<double>& v, double center) {
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - center);
  return median_inplace(dev);
}

constexpr double kMadToSigma = 1.4826;

}  // namespace hsdetect::detail
