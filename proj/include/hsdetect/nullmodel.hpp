#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "hsdetect/teststat.hpp"

namespace hsdetect {

/// Empirical null learned from the pooled field t = (tmax, -tmin).
///
/// s0 = {tmax_i <= mu0}, g0 = {-tmin_i > mu0}. For continuous statistics the
/// two sets have equal size n0 and pi0 = min(2 n0 / n, 1). The CDF is the
/// step function over the union of both sets.
struct NullModel {
  double mu0_hat = 0.0;
  double pi0_hat = 1.0;
  std::size_t n0 = 0;        // |s0|
  std::size_t g0_size = 0;   // |g0|
  std::size_t n = 0;         // pixels in the fitting field
  std::vector<double> pool;  // s0 and g0 values, sorted ascending

  double cdf(double t) const;
  // #{pool <= t}
  std::size_t count_at_or_below(double t) const;

  // Header "mu0_hat,pi0_hat,n0,n,g0", one value row, then "value,set" rows
  // (set 0 for s0, 1 for g0).
  void save_csv(const std::filesystem::path& path) const;
  static NullModel load_csv(const std::filesystem::path& path);
};

/// Throws InputError for fewer than two tested pixels and
/// NumericError("degenerate field") when every statistic is identical.
NullModel fit_null(const TestField& field);

double null_cdf(const NullModel& model, double t);

/// p_i = 1 - F0(tmax_i); NaN for pixels that were not tested.
std::vector<double> empirical_pvalues(const NullModel& model,
                                      const TestField& field);

}  // namespace hsdetect
