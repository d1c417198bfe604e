#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hsdetect/nullmodel.hpp"
#include "hsdetect/teststat.hpp"

namespace hsdetect {

/// Decisions for one field. NaN p-values mark untested pixels; they are never
/// detected and carry NaN q-values.
struct DetectionResult {
  std::vector<double> pvalues;
  std::vector<double> qvalues;
  std::vector<std::uint8_t> detected;
  std::size_t k_hat = 0;
  double nominal_q = 0.0;
  double pi0_used = 1.0;
};

/// Benjamini-Hochberg step-up at level q: k = max{k : p_(k) <= q k / n}.
/// q-values are filled with pi0 = 1.
DetectionResult bh_reject(std::span<const double> pvalues, double q);

/// min((1 + #{p > zeta}) / ((1 - zeta) n), 1).
double storey_pi0(std::span<const double> pvalues, double zeta);

/// Same estimator at zeta = num / den, evaluated as one rounded ratio of
/// integers so that grid values compare exactly with other rational counts.
double storey_pi0(std::span<const double> pvalues, std::size_t num,
                  std::size_t den);

/// Cumulative minimum from the right of pi0 p_(k) n / k, capped at 1.
std::vector<double> qvalues(std::span<const double> pvalues, double pi0);

struct Pi0Choice {
  enum class Kind { Empirical, Storey, One };
  Kind kind = Kind::Empirical;
  double zeta = 0.5;

  // "empirical", "one", or "storey:<zeta>".
  static Pi0Choice parse(std::string_view text);
};

/// Empirical p-values, BH at min(q / pi0, 1), q-values with the same pi0.
DetectionResult detect(const NullModel& model, const TestField& field,
                       double q, Pi0Choice pi0 = {});

/// BH at min(q / pi0, 1) on precomputed p-values.
DetectionResult detect_pvalues(std::span<const double> pvalues, double q,
                               double pi0);

}  // namespace hsdetect
