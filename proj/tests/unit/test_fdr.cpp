#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "hsdetect/error.hpp"
#include "hsdetect/fdr.hpp"

using namespace hsdetect;

TEST(Fdr, HandStepUp) {
  std::vector<double> p = {0.001, 0.2, 0.9};
  auto r = bh_reject(p, 0.05);
  EXPECT_EQ(r.k_hat, 1u);
  EXPECT_EQ(r.detected, (std::vector<std::uint8_t>{1, 0, 0}));
}

TEST(Fdr, StepUpNotStepDown) {
  // p_(1) fails its own threshold, p_(2) passes: step-up rejects both.
  std::vector<double> p = {0.04, 0.05};
  EXPECT_EQ(bh_reject(p, 0.05).k_hat, 2u);
}

TEST(Fdr, Extremes) {
  std::vector<double> ones(10, 1.0), zeros(10, 0.0);
  EXPECT_EQ(bh_reject(ones, 0.2).k_hat, 0u);
  EXPECT_EQ(bh_reject(zeros, 0.2).k_hat, 10u);
  EXPECT_EQ(bh_reject(zeros, 0.0).k_hat, 0u);
  EXPECT_THROW(bh_reject(zeros, 1.5), InputError);
  std::vector<double> bad = {0.1, 1.2};
  EXPECT_THROW(bh_reject(bad, 0.1), InputError);
}

TEST(Fdr, TiesStayTogether) {
  std::vector<double> p = {0.01, 0.03, 0.03, 0.03, 0.5};
  auto r = bh_reject(p, 0.1);
  EXPECT_EQ(r.k_hat, 4u);
  EXPECT_EQ(r.detected, (std::vector<std::uint8_t>{1, 1, 1, 1, 0}));
}

TEST(Fdr, UntestedEntriesAreIgnored) {
  std::vector<double> p = {0.001, NAN, 0.2, 0.9};
  auto r = bh_reject(p, 0.05);
  EXPECT_EQ(r.k_hat, 1u);
  EXPECT_EQ(r.detected[1], 0);
  EXPECT_TRUE(std::isnan(r.qvalues[1]));
}

TEST(Fdr, StoreyFormula) {
  std::vector<double> p = {0.6, 0.7, 0.8, 0.9};
  EXPECT_DOUBLE_EQ(storey_pi0(p, 0.5), 1.0);
  std::vector<double> q = {0.95, 0.97, 0.99, 0.6, 0.1, 0.2, 0.3, 0.05, 0.01, 0.02};
  // (1 + 4) / (0.5 * 10) = 1 -> capped; with zeta = 0.9: (1 + 3) / (0.1 * 10) > 1.
  EXPECT_DOUBLE_EQ(storey_pi0(q, 0.5), 1.0);
  std::vector<double> r(100, 0.01);
  for (int i = 0; i < 30; ++i) r[i] = 0.9;
  EXPECT_DOUBLE_EQ(storey_pi0(r, 0.5), 31.0 / 50.0);
  EXPECT_DOUBLE_EQ(storey_pi0(r, 1, 2), 31.0 / 50.0);
  EXPECT_THROW(storey_pi0(r, 1.0), InputError);
}

TEST(Fdr, StoreyUniformIsNearOne) {
  testgen::Rng rng(51);
  std::vector<double> p(100000);
  for (double& x : p) x = testgen::uniform(rng, 0.0, 1.0);
  EXPECT_NEAR(storey_pi0(p, 0.5), 1.0, 0.02);
}

TEST(Fdr, QvalueHandExample) {
  std::vector<double> p = {0.01, 0.02, 0.03, 0.9};
  auto q = qvalues(p, 1.0);
  EXPECT_NEAR(q[0], 0.04, 1e-15);
  EXPECT_NEAR(q[1], 0.04, 1e-15);
  EXPECT_NEAR(q[2], 0.04, 1e-15);
  EXPECT_NEAR(q[3], 0.9, 1e-15);
  std::vector<double> one = {0.37};
  EXPECT_EQ(qvalues(one, 1.0)[0], 0.37);
  EXPECT_THROW(qvalues(one, 0.0), InputError);
}

TEST(Fdr, Pi0ChoiceParse) {
  EXPECT_EQ(Pi0Choice::parse("empirical").kind, Pi0Choice::Kind::Empirical);
  EXPECT_EQ(Pi0Choice::parse("one").kind, Pi0Choice::Kind::One);
  auto s = Pi0Choice::parse("storey:0.25");
  EXPECT_EQ(s.kind, Pi0Choice::Kind::Storey);
  EXPECT_EQ(s.zeta, 0.25);
  EXPECT_THROW(Pi0Choice::parse("storey:1"), InputError);
  EXPECT_THROW(Pi0Choice::parse("half"), InputError);
}

TEST(FdrProperty, QvaluesMonotoneAndConsistentWithDetection) {
  testgen::Rng rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = testgen::index(rng, 1, 300);
    std::vector<double> p(n);
    for (double& x : p)
      x = testgen::uniform(rng, 0.0, 1.0) < 0.3 ? testgen::uniform(rng, 0.0, 0.01)
                                                : testgen::uniform(rng, 0.0, 1.0);
    double pi0 = testgen::uniform(rng, 0.5, 1.0);
    double q = testgen::uniform(rng, 0.01, 0.4);
    auto r = detect_pvalues(p, q, pi0);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LE(r.qvalues[i], 1.0);
      EXPECT_EQ(static_cast<bool>(r.detected[i]), r.qvalues[i] <= q) << trial;
      for (std::size_t j = 0; j < n; ++j)
        if (p[i] < p[j]) EXPECT_LE(r.qvalues[i], r.qvalues[j]);
    }
  }
}

TEST(FdrProperty, LargerLevelNeverShrinksTheSet) {
  testgen::Rng rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(200);
    for (double& x : p) x = std::pow(testgen::uniform(rng, 0.0, 1.0), 3.0);
    double q1 = testgen::uniform(rng, 0.0, 0.5), q2 = q1 + testgen::uniform(rng, 0.0, 0.5);
    auto a = bh_reject(p, q1), b = bh_reject(p, q2);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_LE(a.detected[i], b.detected[i]);
  }
}

TEST(FdrProperty, StoreyEqualsEmpiricalPi0OnTheGrid) {
  testgen::Rng rng(54);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = testgen::random_field(rng, 20, 25, testgen::uniform(rng, 0.6, 1.0));
    auto m = fit_null(f);
    ASSERT_EQ(m.n0, m.g0_size);
    auto p = empirical_pvalues(m, f);
    for (std::size_t k = m.n0; k < 2 * m.n0; ++k)
      ASSERT_EQ(storey_pi0(p, k, 2 * m.n0), m.pi0_hat) << "k = " << k;
  }
}

TEST(Fdr, DetectUsesPi0Choice) {
  testgen::Rng rng(55);
  auto f = testgen::random_field(rng, 30, 30, 0.8);
  auto m = fit_null(f);
  EXPECT_EQ(detect(m, f, 0.1).pi0_used, m.pi0_hat);
  EXPECT_EQ(detect(m, f, 0.1, Pi0Choice::parse("one")).pi0_used, 1.0);
  auto p = empirical_pvalues(m, f);
  EXPECT_EQ(detect(m, f, 0.1, Pi0Choice::parse("storey:0.5")).pi0_used, storey_pi0(p, 0.5));
  EXPECT_EQ(detect(m, f, 0.0).k_hat, 0u);
}
