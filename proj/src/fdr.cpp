#include "hsdetect/fdr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hsdetect/error.hpp"
#include "hsdetect/io.hpp"

namespace hsdetect {

namespace {

// Indices of tested entries, sorted by p-value (stable on ties).
std::vector<std::size_t> sorted_tested(std::span<const double> p) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::isnan(p[i])) continue;
    if (p[i] < 0.0 || p[i] > 1.0)
      throw InputError("p-value outside [0, 1]: " + format_double(p[i]));
    idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return idx;
}

}  // namespace

DetectionResult bh_reject(std::span<const double> pvalues, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("q must lie in [0, 1]");
  auto idx = sorted_tested(pvalues);
  const std::size_t n = idx.size();

  DetectionResult r;
  r.pvalues.assign(pvalues.begin(), pvalues.end());
  r.detected.assign(pvalues.size(), 0);
  r.nominal_q = q;
  r.pi0_used = 1.0;
  if (q > 0.0)
    for (std::size_t k = n; k >= 1; --k)
      if (pvalues[idx[k - 1]] <= q * static_cast<double>(k) / static_cast<double>(n)) {
        r.k_hat = k;
        break;
      }
  for (std::size_t k = 0; k < r.k_hat; ++k) r.detected[idx[k]] = 1;
  r.qvalues = qvalues(pvalues, 1.0);
  return r;
}

double storey_pi0(std::span<const double> pvalues, double zeta) {
  if (!(zeta >= 0.0 && zeta < 1.0)) throw InputError("zeta must lie in [0, 1)");
  std::size_t n = 0, above = 0;
  for (double p : pvalues) {
    if (std::isnan(p)) continue;
    ++n;
    above += p > zeta;
  }
  if (n == 0) throw InputError("no p-values");
  double v = (1.0 + static_cast<double>(above)) /
             ((1.0 - zeta) * static_cast<double>(n));
  return std::min(v, 1.0);
}

double storey_pi0(std::span<const double> pvalues, std::size_t num,
                  std::size_t den) {
  if (den == 0 || num >= den) throw InputError("zeta must lie in [0, 1)");
  const double zeta = static_cast<double>(num) / static_cast<double>(den);
  std::size_t n = 0, above = 0;
  for (double p : pvalues) {
    if (std::isnan(p)) continue;
    ++n;
    above += p > zeta;
  }
  if (n == 0) throw InputError("no p-values");
  // (1 + above) / ((1 - num/den) n) = (1 + above) den / ((den - num) n)
  double top = static_cast<double>((1 + above) * den);
  double bottom = static_cast<double>((den - num) * n);
  return std::min(top / bottom, 1.0);
}

std::vector<double> qvalues(std::span<const double> pvalues, double pi0) {
  if (!(pi0 > 0.0 && pi0 <= 1.0)) throw InputError("pi0 must lie in (0, 1]");
  auto idx = sorted_tested(pvalues);
  const std::size_t n = idx.size();
  std::vector<double> q(pvalues.size(), std::numeric_limits<double>::quiet_NaN());
  double running = 1.0;
  for (std::size_t k = n; k >= 1; --k) {
    // n / k first: it rounds to >= 1, so q never drops below pi0 p.
    double raw = pi0 * (pvalues[idx[k - 1]] *
                        (static_cast<double>(n) / static_cast<double>(k)));
    running = std::min(running, raw);
    q[idx[k - 1]] = running;
  }
  return q;
}

Pi0Choice Pi0Choice::parse(std::string_view text) {
  Pi0Choice c;
  if (text == "empirical") return c;
  if (text == "one") {
    c.kind = Kind::One;
    return c;
  }
  if (text.substr(0, 7) == "storey:") {
    c.kind = Kind::Storey;
    c.zeta = parse_double(text.substr(7));
    if (!(c.zeta >= 0.0 && c.zeta < 1.0))
      throw InputError("storey zeta must lie in [0, 1)");
    return c;
  }
  throw InputError("pi0 must be empirical, one, or storey:<zeta>");
}

DetectionResult detect_pvalues(std::span<const double> pvalues, double q,
                               double pi0) {
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("q must lie in [0, 1]");
  if (!(pi0 > 0.0 && pi0 <= 1.0)) throw InputError("pi0 must lie in (0, 1]");
  DetectionResult r = bh_reject(pvalues, std::min(q / pi0, 1.0));
  r.nominal_q = q;
  r.pi0_used = pi0;
  r.qvalues = qvalues(pvalues, pi0);
  return r;
}

DetectionResult detect(const NullModel& model, const TestField& field,
                       double q, Pi0Choice pi0) {
  auto p = empirical_pvalues(model, field);
  double pi = 1.0;
  switch (pi0.kind) {
    case Pi0Choice::Kind::Empirical:
      pi = model.pi0_hat;
      break;
    case Pi0Choice::Kind::Storey:
      pi = storey_pi0(p, pi0.zeta);
      break;
    case Pi0Choice::Kind::One:
      break;
  }
  return detect_pvalues(p, q, pi);
}

}  // namespace hsdetect
