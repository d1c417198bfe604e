#include "hsdetect/pfabound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hsdetect/error.hpp"
#include "hsdetect/io.hpp"

namespace hsdetect {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCorrSlack = 1e-12;

double clamp_corr(double r) {
  if (!(std::abs(r) <= 1.0 + kCorrSlack))
    throw InputError("correlation outside [-1, 1]: " + format_double(r));
  return std::clamp(r, -1.0, 1.0);
}

// P(X > h, Y > k), after Genz's BVNU (Drezner-Wesolowsky with Genz's
// refinements) using a 20-point Gauss-Legendre rule on both branches.
double bvn_upper(double h, double k, double r) {
  using boost::math::quadrature::gauss;
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    double hs = (h * h + k * k) / 2.0, asr = std::asin(r);
    auto g = [&](double x) {
      double sn = std::sin(asr * (x + 1.0) / 2.0);
      return std::exp((sn * hk - hs) / (1.0 - sn * sn));
    };
    bvn = gauss<double, 20>::integrate(g, -1.0, 1.0) * asr / (2.0 * kTwoPi) +
          normal_cdf(-h) * normal_cdf(-k);
    return std::clamp(bvn, 0.0, 1.0);
  }
  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    double as = (1.0 - r) * (1.0 + r), a = std::sqrt(as);
    double bs = (h - k) * (h - k);
    double c = (4.0 - hk) / 8.0, d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * normal_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    auto g = [&](double s) {
      double xs = s * s, rs = std::sqrt(1.0 - xs);
      double asr = -(bs / xs + hk) / 2.0;
      if (asr <= -100.0) return 0.0;
      return std::exp(asr) * (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                              (1.0 + c * xs * (1.0 + d * xs)));
    };
    bvn += gauss<double, 20>::integrate(g, 0.0, a);
    bvn = -bvn / kTwoPi;
  }
  if (r > 0.0) {
    bvn += normal_cdf(-std::max(h, k));
  } else {
    bvn = -bvn;
    if (k > h) bvn += h < 0.0 ? normal_cdf(k) - normal_cdf(h)
                              : normal_cdf(-h) - normal_cdf(-k);
  }
  return std::clamp(bvn, 0.0, 1.0);
}

double bvn_density(double x, double y, double r) {
  double s = 1.0 - r * r;
  return std::exp(-(x * x - 2.0 * r * x * y + y * y) / (2.0 * s)) /
         (kTwoPi * std::sqrt(s));
}

// Phi((b - mu) / sqrt(var)), treating a vanishing variance as a point mass.
double conditional_cdf(double b, double mu, double var) {
  if (var <= 0.0) return b >= mu ? 1.0 : 0.0;
  return normal_cdf((b - mu) / std::sqrt(var));
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

double normal_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("probability outside [0, 1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_cdf_2d(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k)) throw InputError("NaN integration limit");
  rho = clamp_corr(rho);
  if (h == -INFINITY || k == -INFINITY) return 0.0;
  if (h == INFINITY) return normal_cdf(k);
  if (k == INFINITY) return normal_cdf(h);
  if (rho == 1.0) return normal_cdf(std::min(h, k));
  if (rho == -1.0) return std::max(0.0, normal_cdf(h) - normal_cdf(-k));
  return bvn_upper(-h, -k, rho);
}

double normal_cdf_3d(double b1, double b2, double b3, double r12, double r13,
                     double r23) {
  using boost::math::quadrature::gauss_kronrod;
  r12 = clamp_corr(r12);
  r13 = clamp_corr(r13);
  r23 = clamp_corr(r23);
  double det = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23;
  if (det < -kCorrSlack)
    throw InputError("correlation matrix is not positive semidefinite");
  if (std::isnan(b1) || std::isnan(b2) || std::isnan(b3))
    throw InputError("NaN integration limit");
  if (b1 == -INFINITY || b2 == -INFINITY || b3 == -INFINITY) return 0.0;
  if (b1 == INFINITY) return normal_cdf_2d(b2, b3, r23);
  if (b2 == INFINITY) return normal_cdf_2d(b1, b3, r13);
  if (b3 == INFINITY) return normal_cdf_2d(b1, b2, r12);

  // Put the strongest pair in positions 2, 3.
  if (std::abs(r12) > std::abs(r23) && std::abs(r12) >= std::abs(r13)) {
    double nb[3] = {b3, b1, b2};
    double n12 = r13, n13 = r23, n23 = r12;
    b1 = nb[0]; b2 = nb[1]; b3 = nb[2];
    r12 = n12; r13 = n13; r23 = n23;
  } else if (std::abs(r13) > std::abs(r23)) {
    std::swap(b1, b2);
    std::swap(r13, r23);
  }

  if (r23 == 1.0) return normal_cdf_2d(b1, std::min(b2, b3), r12);
  if (r23 == -1.0) {
    if (b2 <= -b3) return 0.0;
    return std::max(0.0, normal_cdf_2d(b1, b2, r12) - normal_cdf_2d(b1, -b3, r12));
  }

  double base = normal_cdf(b1) * normal_cdf_2d(b2, b3, r23);
  if (r12 == 0.0 && r13 == 0.0) return base;

  // d/dt of P along R(t), which moves the (1, 2) and (1, 3) entries from 0.
  auto f = [&](double t) {
    double p12 = t * r12, p13 = t * r13;
    double dt = 1.0 - p12 * p12 - p13 * p13 - r23 * r23 + 2.0 * p12 * p13 * r23;
    double v = 0.0;
    if (r12 != 0.0) {
      double s = 1.0 - p12 * p12;
      double mu = ((p13 - p12 * r23) * b1 + (r23 - p12 * p13) * b2) / s;
      v += r12 * bvn_density(b1, b2, p12) * conditional_cdf(b3, mu, dt / s);
    }
    if (r13 != 0.0) {
      double s = 1.0 - p13 * p13;
      double mu = ((p12 - p13 * r23) * b1 + (r23 - p12 * p13) * b3) / s;
      v += r13 * bvn_density(b1, b3, p13) * conditional_cdf(b2, mu, dt / s);
    }
    return v;
  };
  double integral = gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14);
  double upper = std::min({normal_cdf_2d(b1, b2, r12), normal_cdf_2d(b1, b3, r13),
                           normal_cdf_2d(b2, b3, r23)});
  return std::clamp(base + integral, 0.0, upper);
}

double pfa_exact_orthogonal(std::size_t m, double eta) {
  if (m == 0) throw InputError("m must be at least 1");
  if (eta == INFINITY) return 0.0;
  if (eta == -INFINITY) return 1.0;
  double log_phi = eta > 0.0 ? std::log1p(-normal_cdf(-eta))
                             : std::log(normal_cdf(eta));
  return -std::expm1(static_cast<double>(m) * log_phi);
}

GaussianCorrModel::GaussianCorrModel(const Dictionary& dict)
    : m_(dict.size()), corr_(m_ * m_) {
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = 0; j < m_; ++j)
      corr_[i * m_ + j] = i == j ? 1.0 : dict.inner(i, j);
}

PfaBound::PfaBound(const Dictionary& dict, double slepian_slack)
    : m_(dict.size()) {
  if (!(slepian_slack >= 0.0)) throw InputError("slepian slack must be >= 0");
  if (m_ == 1) return;
  if (!dict.recipe())
    throw InputError("the recursive bound needs an LSS dictionary");
  const auto& recipe = *dict.recipe();
  const double tau = dict.tau();

  auto check_nonneg = [](const GaussianCorrModel& c) {
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j)
        if (c(i, j) < -kCorrSlack)
          throw InputError("dictionary has negatively correlated atoms");
  };

  GaussianCorrModel prev(build_lss(recipe.reference, 2, tau, recipe.mode));
  check_nonneg(prev);
  rho2_ = prev(0, 1);
  for (std::size_t k = 3; k <= m_; ++k) {
    Dictionary dk = build_lss(recipe.reference, k, tau, recipe.mode);
    GaussianCorrModel cur(dk);
    check_nonneg(cur);
    // Slepian: atoms 1..k-1 of the denser grid dominate atoms 0..k-2 of the
    // previous grid entrywise. A truncated, sampled line shape breaks this
    // by ~1e-4 between far-apart atoms, hence the slack.
    for (std::size_t i = 0; i + 1 < k; ++i)
      for (std::size_t j = 0; j + 1 < k; ++j) {
        double gap = prev(i, j) - cur(i + 1, j + 1);
        max_violation_ = std::max(max_violation_, gap);
        if (gap > slepian_slack + kCorrSlack)
          throw InputError(
              "autocorrelation is not monotone on the shift grid (size " +
              std::to_string(k) + ", gap " + format_double(gap) + ")");
      }
    steps_.push_back({cur(0, 1), cur(0, 2), cur(1, 2)});
    if (k == m_)
      for (std::size_t a = 0; a < m_; ++a)
        for (std::size_t b = 0; b < m_; ++b)
          if (std::abs(cur(a, b) - dict.inner(a, b)) > 1e-12)
            throw InputError("dictionary does not match its own LSS recipe");
    prev = std::move(cur);
  }
}

double PfaBound::lower_cdf(double eta) const {
  if (m_ == 1) return normal_cdf(eta);
  double m = normal_cdf_2d(eta, eta, rho2_);
  for (const auto& s : steps_) {
    if (m == 0.0) return 0.0;
    double pair = normal_cdf_2d(eta, eta, s.r23);
    if (pair == 0.0) return 0.0;
    double factor = normal_cdf_3d(eta, eta, eta, s.r12, s.r13, s.r23) / pair;
    m *= std::min(factor, 1.0);
  }
  return m;
}

double PfaBound::threshold(double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  const double target = 1.0 - alpha;
  if (m_ == 1) return normal_quantile(target);
  // Phi^m <= M_m <= Phi brackets the root.
  double lo = normal_quantile(target) - 1e-3;
  double hi = normal_quantile(std::pow(target, 1.0 / static_cast<double>(m_))) + 1e-3;
  double flo = lower_cdf(lo), fhi = lower_cdf(hi);
  if (!(flo < target && fhi > target))
    throw NumericError("threshold bracket does not enclose the root");
  constexpr int kGrid = 32;
  double prev = flo;
  for (int i = 1; i <= kGrid; ++i) {
    double v = lower_cdf(lo + (hi - lo) * i / kGrid);
    if (v < prev - 1e-13) throw NumericError("bound is not monotone in eta");
    prev = v;
  }
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    (lower_cdf(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double pfa_bound(const Dictionary& dict, double eta) {
  if (dict.size() == 1) return pfa_exact_orthogonal(1, eta);
  return PfaBound(dict).pfa(eta);
}

double threshold_for_pfa(const Dictionary& dict, double alpha) {
  return PfaBound(dict).threshold(alpha);
}

}  // namespace hsdetect
