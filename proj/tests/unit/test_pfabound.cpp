#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "hsdetect/error.hpp"
#include "hsdetect/pfabound.hpp"
#include "hsdetect/similarity.hpp"

using namespace hsdetect;

namespace {

double orthant3(double r12, double r13, double r23) {
  return 0.125 + (std::asin(r12) + std::asin(r13) + std::asin(r23)) /
                     (4.0 * std::numbers::pi);
}

// Single-band spike: every shift grid with spacing >= 1 is orthogonal.
Dictionary spike_dict(std::size_t m, double tau) {
  std::vector<double> v(30, 0.0);
  v[15] = 1.0;
  return build_lss(ReferenceAtom(v, 15), m, tau, ShiftMode::IntegerBand);
}

Dictionary line_dict(std::size_t m) {
  return build_lss(gaussian_reference(30, 14, 5.0, 6.0), m, 8.0, ShiftMode::Continuous);
}

}  // namespace

TEST(Bivariate, ClosedForms) {
  for (double h : {-2.0, -0.3, 0.0, 0.8, 2.5})
    for (double k : {-1.7, 0.0, 0.4, 3.0}) {
      EXPECT_NEAR(normal_cdf_2d(h, k, 0.0), normal_cdf(h) * normal_cdf(k), 1e-15);
      EXPECT_NEAR(normal_cdf_2d(h, k, 1.0), normal_cdf(std::min(h, k)), 1e-15);
      EXPECT_NEAR(normal_cdf_2d(h, k, -1.0),
                  std::max(0.0, normal_cdf(h) + normal_cdf(k) - 1.0), 1e-15);
    }
  EXPECT_NEAR(normal_cdf_2d(0, 0, 0.5), 1.0 / 3.0, 1e-15);
  for (double r = -0.99; r < 1.0; r += 0.03)
    EXPECT_NEAR(normal_cdf_2d(0, 0, r), 0.25 + std::asin(r) / (2 * std::numbers::pi), 1e-14);
}

// Values from scipy's bivariate normal CDF.
TEST(Bivariate, ReferenceValues) {
  EXPECT_NEAR(normal_cdf_2d(0.3, -0.7, 0.45), 0.20105779505762855, 1e-12);
  EXPECT_NEAR(normal_cdf_2d(1.5, 2.0, -0.95), 0.9104426667829627, 1e-12);
  EXPECT_NEAR(normal_cdf_2d(-1.0, 0.2, 0.97), 0.15865524563274344, 1e-12);
}

TEST(Bivariate, LimitsAndErrors) {
  EXPECT_EQ(normal_cdf_2d(-INFINITY, 0.3, 0.5), 0.0);
  EXPECT_NEAR(normal_cdf_2d(INFINITY, 0.3, 0.5), normal_cdf(0.3), 1e-16);
  EXPECT_NEAR(normal_cdf_2d(0.3, INFINITY, 0.5), normal_cdf(0.3), 1e-16);
  EXPECT_THROW(normal_cdf_2d(0, 0, 1.1), InputError);
}

TEST(Bivariate, ContinuousAcrossBranchSwitch) {
  for (double h : {-1.0, 0.5, 2.0}) {
    double a = normal_cdf_2d(h, 0.3, 0.925 - 1e-9), b = normal_cdf_2d(h, 0.3, 0.925);
    EXPECT_NEAR(a, b, 1e-9);
    a = normal_cdf_2d(h, 0.3, -0.925 + 1e-9);
    b = normal_cdf_2d(h, 0.3, -0.925);
    EXPECT_NEAR(a, b, 1e-9);
  }
}

TEST(Trivariate, ClosedForms) {
  for (double a : {-1.0, 0.0, 1.3})
    for (double b : {-0.5, 0.7})
      for (double c : {0.2, 2.0}) {
        EXPECT_NEAR(normal_cdf_3d(a, b, c, 0, 0, 0),
                    normal_cdf(a) * normal_cdf(b) * normal_cdf(c), 1e-15);
        EXPECT_NEAR(normal_cdf_3d(a, b, c, 1, 1, 1), normal_cdf(std::min({a, b, c})), 1e-15);
        // X2 = X1, correlated 0.4 with X3.
        EXPECT_NEAR(normal_cdf_3d(a, b, c, 1, 0.4, 0.4),
                    normal_cdf_2d(std::min(a, b), c, 0.4), 1e-15);
        // X3 = -X2.
        EXPECT_NEAR(normal_cdf_3d(a, b, c, 0.3, -0.3, -1),
                    std::max(0.0, normal_cdf_2d(a, b, 0.3) - normal_cdf_2d(a, -c, 0.3)),
                    1e-15);
        // Independent first coordinate.
        EXPECT_NEAR(normal_cdf_3d(a, b, c, 0, 0, 0.6),
                    normal_cdf(a) * normal_cdf_2d(b, c, 0.6), 1e-15);
      }
}

TEST(TrivariateProperty, OrthantIdentity) {
  testgen::Rng rng(61);
  for (int trial = 0; trial < 300; ++trial) {
    double r12 = testgen::uniform(rng, -0.99, 0.99), r13 = testgen::uniform(rng, -0.99, 0.99);
    double r23 = testgen::uniform(rng, -0.99, 0.99);
    double det = 1 - r12 * r12 - r13 * r13 - r23 * r23 + 2 * r12 * r13 * r23;
    if (det < 0) {
      EXPECT_THROW(normal_cdf_3d(0, 0, 0, r12, r13, r23), InputError);
      continue;
    }
    EXPECT_NEAR(normal_cdf_3d(0, 0, 0, r12, r13, r23), orthant3(r12, r13, r23), 1e-12);
  }
}

// Values from one-dimensional conditioning on X1 with scipy quadrature.
TEST(Trivariate, ReferenceValues) {
  EXPECT_NEAR(normal_cdf_3d(0.5, -0.2, 1.0, .3, .5, .6), 0.3258093015842404, 1e-11);
  EXPECT_NEAR(normal_cdf_3d(1.2, 0.7, -0.4, -.4, .2, -.3), 0.2020285320429651, 1e-11);
  EXPECT_NEAR(normal_cdf_3d(2.0, 2.0, 2.0, .9, .8, .95), 0.9616052879067709, 1e-11);
}

TEST(Trivariate, PermutationSymmetry) {
  testgen::Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    double b[3] = {testgen::uniform(rng, -2, 2), testgen::uniform(rng, -2, 2),
                   testgen::uniform(rng, -2, 2)};
    double r12 = testgen::uniform(rng, 0, 0.95), r13 = testgen::uniform(rng, 0, 0.95),
           r23 = testgen::uniform(rng, 0, 0.95);
    double det = 1 - r12 * r12 - r13 * r13 - r23 * r23 + 2 * r12 * r13 * r23;
    if (det <= 0) continue;
    double base = normal_cdf_3d(b[0], b[1], b[2], r12, r13, r23);
    EXPECT_NEAR(normal_cdf_3d(b[1], b[0], b[2], r12, r23, r13), base, 1e-12);
    EXPECT_NEAR(normal_cdf_3d(b[2], b[1], b[0], r23, r13, r12), base, 1e-12);
  }
}

TEST(Trivariate, SingularAndInfinite) {
  // Rank-two matrix with no unit correlation.
  EXPECT_NEAR(normal_cdf_3d(0, 0, 0, 0.5, 0.5, -0.5), orthant3(0.5, 0.5, -0.5), 1e-9);
  EXPECT_EQ(normal_cdf_3d(-INFINITY, 0, 0, 0.2, 0.2, 0.2), 0.0);
  EXPECT_NEAR(normal_cdf_3d(INFINITY, 0.1, 0.2, 0.2, 0.3, 0.4),
              normal_cdf_2d(0.1, 0.2, 0.4), 1e-16);
  EXPECT_THROW(normal_cdf_3d(0, 0, 0, 0.9, -0.9, 0.9), InputError);
}

TEST(Orthogonal, ExactPfa) {
  EXPECT_NEAR(pfa_exact_orthogonal(1, normal_quantile(0.95)), 0.05, 1e-15);
  EXPECT_DOUBLE_EQ(pfa_exact_orthogonal(2, 0.0), 0.75);
  EXPECT_NEAR(pfa_exact_orthogonal(15, 2.0), 0.291916772998015, 1e-14);
  EXPECT_NEAR(pfa_exact_orthogonal(3, 9.0), 3.0 * normal_cdf(-9.0), 1e-30);
  EXPECT_THROW(pfa_exact_orthogonal(0, 1.0), InputError);
}

TEST(Orthogonal, MonteCarloCrossCheck) {
  testgen::Rng rng(63);
  std::normal_distribution<double> g;
  const int draws = 1000000;
  int hits = 0;
  for (int i = 0; i < draws; ++i) {
    double mx = -INFINITY;
    for (int k = 0; k < 15; ++k) mx = std::max(mx, g(rng));
    hits += mx > 2.0;
  }
  double p = pfa_exact_orthogonal(15, 2.0), est = double(hits) / draws;
  EXPECT_NEAR(est, p, 4.0 * std::sqrt(p * (1 - p) / draws));
}

TEST(Bound, OrthogonalAtomsAreSharp) {
  auto d = spike_dict(5, 8.0);
  ASSERT_EQ(d.coherence(), 0.0);
  for (double eta : {0.0, 1.0, 2.0, 3.0})
    EXPECT_NEAR(pfa_bound(d, eta), pfa_exact_orthogonal(5, eta), 1e-13);
  EXPECT_NEAR(threshold_for_pfa(d, 0.05), normal_quantile(std::pow(0.95, 0.2)), 1e-8);
}

TEST(Bound, SingleAtom) {
  auto d = build_lss(gaussian_reference(), 1, 0.0, ShiftMode::IntegerBand);
  EXPECT_NEAR(threshold_for_pfa(d, 0.05), normal_quantile(0.95), 1e-12);
  EXPECT_NEAR(pfa_bound(d, 1.0), 1.0 - normal_cdf(1.0), 1e-15);
}

TEST(Bound, NeedsRecipe) {
  auto d = line_dict(4);
  std::vector<std::vector<double>> atoms;
  for (std::size_t k = 0; k < d.size(); ++k) atoms.emplace_back(d.atom(k).begin(), d.atom(k).end());
  Dictionary plain(atoms, d.shifts());
  EXPECT_THROW(PfaBound{plain}, InputError);
}

TEST(BoundProperty, NonIncreasingInM) {
  for (double t : {0.5, 1.5, 2.5}) {
    double prev = 1.0;
    for (std::size_t m = 2; m <= 20; ++m) {
      double v = PfaBound(line_dict(m)).lower_cdf(t);
      EXPECT_LE(v, prev + 1e-14) << "m = " << m << " t = " << t;
      prev = v;
    }
  }
}

TEST(BoundProperty, LiesBetweenIndependentAndSingleAtom) {
  for (std::size_t m : {2u, 5u, 12u})
    for (double t : {0.0, 1.0, 2.5}) {
      double v = PfaBound(line_dict(m)).lower_cdf(t);
      EXPECT_GE(v, std::pow(normal_cdf(t), double(m)) - 1e-14);
      EXPECT_LE(v, normal_cdf(t) + 1e-14);
    }
}

TEST(BoundProperty, DominatesMonteCarlo) {
  testgen::Rng rng(64);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 4; ++trial) {
    auto c = testgen::random_lss_case(rng, 8);
    auto d = testgen::build(c);
    double eta = testgen::uniform(rng, 1.0, 2.5);
    const int draws = 200000;
    int hits = 0;
    std::vector<double> e(d.length());
    for (int i = 0; i < draws; ++i) {
      for (double& x : e) x = g(rng);
      double mx = -INFINITY;
      for (std::size_t k = 0; k < d.size(); ++k) mx = std::max(mx, dot(d.atom(k), e));
      hits += mx > eta;
    }
    double est = double(hits) / draws;
    double se = std::sqrt(est * (1 - est) / draws);
    EXPECT_GE(pfa_bound(d, eta), est - 3 * se);
  }
}

TEST(Bound, CorrelatedThresholdsGrowSlowerThanOrthogonal) {
  double prev_gap = 0.0;
  for (std::size_t m = 3; m <= 20; m += 1) {
    double lss = threshold_for_pfa(line_dict(m), 0.05);
    double orth = normal_quantile(std::pow(0.95, 1.0 / m));
    EXPECT_LT(lss, orth);
    EXPECT_GE(orth - lss, prev_gap - 1e-9);
    prev_gap = orth - lss;
  }
  EXPECT_THROW(threshold_for_pfa(line_dict(3), 0.0), InputError);
}

TEST(Bound, SlepianSlackIsExplicit) {
  // Sampled truncation edges break the ordering slightly at m = 18.
  auto d = line_dict(18);
  EXPECT_THROW(PfaBound(d, 0.0), InputError);
  PfaBound b(d);
  EXPECT_GT(b.max_slepian_violation(), 1e-6);
  EXPECT_LT(b.max_slepian_violation(), PfaBound::kDefaultSlepianSlack);
  EXPECT_LE(PfaBound(line_dict(10), 0.0).max_slepian_violation(), 1e-12);
}
