#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "generators.hpp"
#include "hsdetect/dictionary.hpp"
#include "hsdetect/error.hpp"
#include "hsdetect/fdr.hpp"
#include "hsdetect/nullmodel.hpp"
#include "hsdetect/pipeline.hpp"
#include "hsdetect/teststat.hpp"

namespace props {

using namespace hsdetect;
namespace fs = std::filesystem;

namespace {

void fail(Result& r, std::size_t c, const std::string& what) {
  if (r.failures++ == 0) {
    std::ostringstream os;
    os << "case " << c << ": " << what;
    r.first_failure = os.str();
  }
}

bool same(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool same(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same(a[i], b[i])) return false;
  return true;
}

Cube random_masked_cube(testgen::Rng& rng, std::size_t ny, std::size_t nx,
                        std::size_t l) {
  Cube c = testgen::random_cube(rng, ny, nx, l);
  std::bernoulli_distribution masked(0.1);
  for (std::size_t p = 0; p < c.pixels(); ++p)
    if (masked(rng)) c.mask(p);
  return c;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hsdetect_prop_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

Result sign_flip_duality(std::uint64_t seed, std::size_t cases) {
  Result r{"sign-flip duality (teststat)"};
  testgen::Rng rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++r.cases) {
    auto lc = testgen::random_lss_case(rng);
    if (c % 2) lc.mode = ShiftMode::IntegerBand;
    Dictionary d = testgen::build(lc);
    Cube y = random_masked_cube(rng, testgen::index(rng, 1, 8), testgen::index(rng, 1, 8), lc.l);
    for (double& v : y.data()) v *= std::pow(10.0, testgen::uniform(rng, -3.0, 3.0));
    if (y.pixels() > 1 && !y.masked(0))
      for (double& v : y.spectrum(0)) v = 0.0;
    Cube neg = y;
    for (double& v : neg.data()) v = -v;
    for (auto kind : {SimilarityKind::MatchedFilter, SimilarityKind::SpectralAngle}) {
      auto a = compute_field(y, d, kind), b = compute_field(neg, d, kind);
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a.valid[i]) {
          if (b.valid[i]) fail(r, c, "mask not preserved");
          continue;
        }
        if (!(b.tmax[i] == -a.tmin[i] && b.tmin[i] == -a.tmax[i])) {
          fail(r, c, "tmax(-y) != -tmin(y) at pixel " + std::to_string(i) + " (" +
                         std::string(to_string(kind)) + ")");
          break;
        }
        if (a.tmin[i] > a.tmax[i]) fail(r, c, "tmin > tmax");
      }
    }
  }
  return r;
}

Result crossing_equation(std::uint64_t seed, std::size_t cases) {
  Result r{"crossing equation (nullmodel)"};
  testgen::Rng rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++r.cases) {
    std::size_t rows = testgen::index(rng, 1, 40), cols = testgen::index(rng, 2, 40);
    auto f = testgen::random_field(rng, rows, cols, testgen::uniform(rng, 0.5, 1.0));
    std::bernoulli_distribution masked(0.05);
    for (std::size_t i = 0; i < f.size(); ++i)
      if (masked(rng)) {
        f.tmax[i] = f.tmin[i] = std::numeric_limits<double>::quiet_NaN();
        f.valid[i] = 0;
        f.argmax[i] = -1;
      }
    if (f.tested() < 2) continue;
    std::size_t below = 0, above = 0;
    NullModel m;
    try {
      m = fit_null(f);
    } catch (const NumericError&) {
      // Every pixel in the alternative tails: both sets empty, 0 = 0.
      std::vector<double> t;
      for (std::size_t i = 0; i < f.size(); ++i)
        if (f.valid[i]) t.insert(t.end(), {f.tmax[i], -f.tmin[i]});
      std::sort(t.begin(), t.end());
      const std::size_t n = t.size() / 2;
      const double mu = (t[n - 1] + t[n]) / 2.0;
      for (std::size_t i = 0; i < f.size(); ++i)
        if (f.valid[i]) below += f.tmax[i] <= mu, above += -f.tmin[i] > mu;
      if (below || above) fail(r, c, "empty pool reported for a non-empty crossing");
      continue;
    }
    const double mu = m.mu0_hat;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f.valid[i]) continue;
      below += f.tmax[i] <= mu;
      above += -f.tmin[i] > mu;
    }
    if (below != above) {
      fail(r, c, "#{tmax <= mu0} = " + std::to_string(below) + " but #{-tmin > mu0} = " +
                     std::to_string(above));
      continue;
    }
    if (m.n0 != below || m.g0_size != above) fail(r, c, "set sizes disagree with counts");
    if (m.n != f.tested()) fail(r, c, "n is not the tested count");
    double pi0 = std::min(2.0 * double(m.n0) / double(m.n), 1.0);
    if (m.pi0_hat != pi0) fail(r, c, "pi0 != min(2 n0 / n, 1)");
    if (null_cdf(m, mu) != 0.5) fail(r, c, "F0(mu0) != 1/2");
    if (null_cdf(m, m.pool.back()) != 1.0) fail(r, c, "F0 does not reach 1");
    if (!std::is_sorted(m.pool.begin(), m.pool.end())) fail(r, c, "pool unsorted");
    for (double p : empirical_pvalues(m, f))
      if (!std::isnan(p) && !(p >= 0.0 && p <= 1.0)) fail(r, c, "p-value out of range");
  }
  return r;
}

Result bh_brute_force(std::uint64_t seed, std::size_t cases) {
  Result r{"BH brute-force equivalence (fdr)"};
  testgen::Rng rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++r.cases) {
    std::size_t n = testgen::index(rng, 1, 80);
    std::vector<double> p(n);
    int style = static_cast<int>(c % 4);
    for (double& v : p) {
      if (style == 0) v = testgen::uniform(rng, 0.0, 1.0);
      else if (style == 1) v = double(testgen::index(rng, 0, 10)) / 10.0;  // heavy ties
      else if (style == 2) v = std::pow(testgen::uniform(rng, 0.0, 1.0), 4.0);
      else v = double(testgen::index(rng, 0, 2 * n)) / double(2 * n);
    }
    double q = c % 5 == 0 ? double(testgen::index(rng, 0, 10)) / 10.0 : testgen::uniform(rng, 0.0, 1.0);

    // Brute force: every k, then everything at or below p_(k).
    std::vector<double> s = p;
    std::sort(s.begin(), s.end());
    std::size_t k_hat = 0;
    for (std::size_t k = 1; k <= n; ++k)
      if (q > 0.0 && s[k - 1] <= q * double(k) / double(n)) k_hat = k;
    auto res = bh_reject(p, q);
    if (res.k_hat != k_hat) {
      fail(r, c, "k_hat " + std::to_string(res.k_hat) + " != " + std::to_string(k_hat));
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      bool want = k_hat > 0 && p[i] <= s[k_hat - 1];
      if (bool(res.detected[i]) != want) {
        fail(r, c, "rejection set differs at " + std::to_string(i));
        break;
      }
    }

    // q-values: detected iff q-value <= q, except inside a rounding band
    // where p n / k and q k / n round differently.
    auto qv = qvalues(p, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (qv[i] < p[i] || qv[i] > 1.0) fail(r, c, "q-value outside [p, 1]");
      if (std::abs(qv[i] - q) <= 1e-12) continue;
      if (bool(res.detected[i]) != (qv[i] <= q)) {
        fail(r, c, "q-value disagrees with the decision at " + std::to_string(i));
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (p[i] < p[j] && qv[i] > qv[j]) fail(r, c, "q-values not monotone");

    double q2 = std::min(1.0, q + testgen::uniform(rng, 0.0, 0.3));
    auto wider = bh_reject(p, q2);
    for (std::size_t i = 0; i < n; ++i)
      if (res.detected[i] && !wider.detected[i]) {
        fail(r, c, "raising q dropped a detection");
        break;
      }
  }
  return r;
}

Result io_round_trip(std::uint64_t seed, std::size_t cases) {
  Result r{"round-trip I/O (pipeline)"};
  testgen::Rng rng(seed);
  auto bin = scratch("cube.fdc1"), dir = scratch("cube_dir"), dict = scratch("dict.csv"),
       field = scratch("field.csv"), null = scratch("null.csv");
  for (std::size_t c = 0; c < cases; ++c, ++r.cases) {
    Cube cube = random_masked_cube(rng, testgen::index(rng, 1, 6), testgen::index(rng, 1, 6),
                                   testgen::index(rng, 1, 9));
    for (double& v : cube.data())
      if (!std::isnan(v)) v *= std::pow(10.0, testgen::uniform(rng, -300.0, 300.0));
    if (!cube.masked(0)) cube.data()[0] = c % 2 ? -0.0 : std::numeric_limits<double>::denorm_min();
    cube.set_band_origin(static_cast<int>(testgen::index(rng, 0, 2000)) - 1000);
    if (c % 2) {
      std::vector<double> var(cube.data().size());
      for (double& v : var) v = testgen::uniform(rng, 1e-3, 1e3);
      cube.set_variance(std::move(var));
    }
    save_cube(cube, bin, CubeFormat::Binary);
    if (!(load_cube(bin, detect_format(bin)) == cube)) fail(r, c, "binary cube differs");
    fs::remove_all(dir);
    save_cube(cube, dir, CubeFormat::CsvDirectory);
    if (!(load_cube(dir, detect_format(dir)) == cube)) fail(r, c, "CSV cube differs");

    Dictionary d = testgen::build(testgen::random_lss_case(rng));
    d.save_csv(dict);
    Dictionary e = Dictionary::load_csv(dict);
    bool dict_ok = e.size() == d.size() && e.length() == d.length() && e.shifts() == d.shifts();
    for (std::size_t k = 0; dict_ok && k < d.size(); ++k)
      dict_ok = std::equal(d.atom(k).begin(), d.atom(k).end(), e.atom(k).begin());
    if (!dict_ok) fail(r, c, "dictionary differs");

    auto f = testgen::random_field(rng, testgen::index(rng, 4, 12), testgen::index(rng, 4, 12), 0.95);
    f.tmax[0] = f.tmin[0] = std::numeric_limits<double>::quiet_NaN();
    f.valid[0] = 0;
    f.argmax[0] = -1;
    f.save_csv(field);
    auto g = TestField::load_csv(field);
    if (!(g.rows == f.rows && g.cols == f.cols && same(g.tmax, f.tmax) && same(g.tmin, f.tmin) &&
          g.argmax == f.argmax && g.valid == f.valid))
      fail(r, c, "test field differs");

    NullModel m = fit_null(f);
    m.save_csv(null);
    NullModel m2 = NullModel::load_csv(null);
    if (!(m2.mu0_hat == m.mu0_hat && m2.pi0_hat == m.pi0_hat && m2.n0 == m.n0 &&
          m2.g0_size == m.g0_size && m2.n == m.n && m2.pool == m.pool))
      fail(r, c, "null model differs");
    if (!same(empirical_pvalues(m2, f), empirical_pvalues(m, f)))
      fail(r, c, "reloaded null model changes p-values");
  }
  for (const auto& p : {bin, dir, dict, field, null}) fs::remove_all(p);
  return r;
}

std::vector<Result> run_all(std::uint64_t seed) {
  return {sign_flip_duality(seed), crossing_equation(seed + 1), bh_brute_force(seed + 2),
          io_round_trip(seed + 3)};
}

}  // namespace props
