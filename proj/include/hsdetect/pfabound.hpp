#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "hsdetect/dictionary.hpp"

namespace hsdetect {

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

/// P(X <= h, Y <= k) for a standard bivariate normal with correlation rho.
/// Infinite limits are allowed. Throws InputError when |rho| > 1.
double normal_cdf_2d(double h, double k, double rho);

/// P(X1 <= b1, X2 <= b2, X3 <= b3) for unit-variance normals. Throws
/// InputError when the correlation matrix is not positive semidefinite.
double normal_cdf_3d(double b1, double b2, double b3, double r12, double r13,
                     double r23);

/// 1 - Phi(eta)^m.
double pfa_exact_orthogonal(std::size_t m, double eta);

/// Correlation of z = D^T e under white noise: the Gram matrix of the atoms.
class GaussianCorrModel {
 public:
  explicit GaussianCorrModel(const Dictionary& dict);
  std::size_t size() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const {
    return corr_[i * m_ + j];
  }

 private:
  std::size_t m_;
  std::vector<double> corr_;
};

/// Recursive lower bound M_m(eta) on P(max_k z_k <= eta) for LSS dictionaries.
///
/// M_2 is the bivariate orthant probability of the first two atoms of the
/// 2-atom dictionary. Going from k to k+1 atoms multiplies by
/// P(z1 <= t | z2 <= t, z3 <= t), where z1..z3 are the three lowest-shift
/// atoms of the (k+1)-atom dictionary. The constructor rebuilds every
/// intermediate dictionary from the recipe and checks the Slepian ordering
/// between consecutive sizes; entries that drop by more than slepian_slack
/// throw InputError.
class PfaBound {
 public:
  static constexpr double kDefaultSlepianSlack = 1e-3;
  explicit PfaBound(const Dictionary& dict,
                    double slepian_slack = kDefaultSlepianSlack);

  std::size_t size() const { return m_; }
  double lower_cdf(double eta) const;  // M_m(eta)
  double pfa(double eta) const { return 1.0 - lower_cdf(eta); }
  double threshold(double alpha) const;

  struct Step {
    double r12, r13, r23;
  };
  double rho2() const { return rho2_; }
  const std::vector<Step>& steps() const { return steps_; }
  /// Largest observed prev(i, j) - cur(i + 1, j + 1); <= 0 when the ordering
  /// holds exactly.
  double max_slepian_violation() const { return max_violation_; }

 private:
  std::size_t m_;
  double rho2_ = 0.0;
  std::vector<Step> steps_;
  double max_violation_ = -std::numeric_limits<double>::infinity();
};

/// Upper bound 1 - M_m(eta) on the false-alarm probability.
double pfa_bound(const Dictionary& dict, double eta);

/// eta with M_m(eta) = 1 - alpha, bisected to 1e-8. Throws NumericError if
/// M_m is not monotone on the bracket or the bracket does not enclose a root.
double threshold_for_pfa(const Dictionary& dict, double alpha);

}  // namespace hsdetect
