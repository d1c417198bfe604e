#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "generators.hpp"
#include "hsdetect/error.hpp"
#include "hsdetect/teststat.hpp"

using namespace hsdetect;

namespace {

Dictionary small_dict() {
  return build_lss(gaussian_reference(20, 10, 4.0, 8.0), 5, 4.0,
                   ShiftMode::IntegerBand);
}

}  // namespace

TEST(TestStat, SingleAtomGivesEqualMaxAndMin) {
  testgen::Rng rng(31);
  auto cube = testgen::random_cube(rng, 4, 5, 20);
  auto d = build_lss(gaussian_reference(20, 10, 4.0, 8.0), 1, 0.0,
                     ShiftMode::IntegerBand);
  auto f = compute_field(cube, d, SimilarityKind::SpectralAngle);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_EQ(f.tmax[i], f.tmin[i]);
    EXPECT_EQ(f.argmax[i], 0);
  }
}

TEST(TestStat, ExactAtomHitsOne) {
  auto d = small_dict();
  Cube cube(1, d.size(), d.length());
  for (std::size_t k = 0; k < d.size(); ++k)
    for (std::size_t b = 0; b < d.length(); ++b) cube.at(0, k, b) = 3.0 * d.atom(k)[b];
  auto f = compute_field(cube, d, SimilarityKind::SpectralAngle);
  for (std::size_t k = 0; k < d.size(); ++k) {
    EXPECT_NEAR(f.tmax[k], 1.0, 1e-15);
    EXPECT_EQ(f.argmax[k], static_cast<int>(k));
  }
}

TEST(TestStat, TiesGoToLowestAtom) {
  std::vector<double> a = {1.0, 0.0, 0.0}, b = {0.0, 0.0, 1.0};
  Dictionary d({a, b}, {0.0, 1.0});
  Cube cube(1, 1, 3);
  cube.at(0, 0, 0) = 1.0;
  cube.at(0, 0, 2) = 1.0;
  auto f = compute_field(cube, d, SimilarityKind::MatchedFilter);
  EXPECT_EQ(f.argmax[0], 0);
}

TEST(TestStat, DimensionMismatch) {
  Cube cube(2, 2, 7);
  EXPECT_THROW(compute_field(cube, small_dict(), SimilarityKind::MatchedFilter),
               InputError);
}

TEST(TestStat, MaskedPixelsAreNotTested) {
  testgen::Rng rng(32);
  auto cube = testgen::random_cube(rng, 3, 3, 20);
  cube.mask(4);
  auto f = compute_field(cube, small_dict(), SimilarityKind::SpectralAngle);
  EXPECT_EQ(f.valid[4], 0);
  EXPECT_TRUE(std::isnan(f.tmax[4]));
  EXPECT_EQ(f.tested(), 8u);
}

TEST(TestStatProperty, MatchesNaiveDoubleLoop) {
  testgen::Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = testgen::build(testgen::random_lss_case(rng));
    auto cube = testgen::random_cube(rng, 6, 7, d.length());
    for (auto kind : {SimilarityKind::MatchedFilter, SimilarityKind::SpectralAngle}) {
      auto f = compute_field(cube, d, kind, 3);
      for (std::size_t p = 0; p < cube.pixels(); ++p) {
        double hi = -INFINITY, lo = INFINITY;
        int best = -1;
        for (std::size_t j = 0; j < d.size(); ++j) {
          double s = similarity(kind, cube.spectrum(p), d.atom(j));
          if (s > hi) {
            hi = s;
            best = static_cast<int>(j);
          }
          lo = std::min(lo, s);
        }
        ASSERT_EQ(f.tmax[p], hi);
        ASSERT_EQ(f.tmin[p], lo);
        ASSERT_EQ(f.argmax[p], best);
      }
    }
  }
}

TEST(TestStatProperty, AddingAnAtomWidensTheRange) {
  testgen::Rng rng(34);
  for (int trial = 0; trial < 30; ++trial) {
    auto c = testgen::random_lss_case(rng);
    auto d = testgen::build(c);
    std::vector<std::vector<double>> atoms;
    std::vector<double> shifts;
    for (std::size_t k = 0; k + 1 < d.size(); ++k) {
      atoms.emplace_back(d.atom(k).begin(), d.atom(k).end());
      shifts.push_back(d.shifts()[k]);
    }
    Dictionary fewer(atoms, shifts);
    auto cube = testgen::random_cube(rng, 5, 5, d.length());
    auto kind = trial % 2 ? SimilarityKind::MatchedFilter : SimilarityKind::SpectralAngle;
    auto a = compute_field(cube, fewer, kind), b = compute_field(cube, d, kind);
    for (std::size_t p = 0; p < a.size(); ++p) {
      EXPECT_GE(b.tmax[p], a.tmax[p]);
      EXPECT_LE(b.tmin[p], a.tmin[p]);
    }
  }
}

TEST(TestStat, CsvRoundTrip) {
  testgen::Rng rng(35);
  auto cube = testgen::random_cube(rng, 3, 4, 20);
  cube.mask(2);
  auto f = compute_field(cube, small_dict(), SimilarityKind::SpectralAngle);
  auto path = std::filesystem::temp_directory_path() / "hsdetect_field_rt.csv";
  f.save_csv(path);
  auto g = TestField::load_csv(path);
  ASSERT_EQ(g.rows, 3u);
  ASSERT_EQ(g.cols, 4u);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_EQ(g.valid[i], f.valid[i]);
    EXPECT_EQ(g.argmax[i], f.argmax[i]);
    if (f.valid[i]) {
      EXPECT_EQ(g.tmax[i], f.tmax[i]);
      EXPECT_EQ(g.tmin[i], f.tmin[i]);
    }
  }
  std::filesystem::remove(path);
}
