#include "hsdetect/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "hsdetect/error.hpp"
#include "hsdetect/parallel.hpp"

namespace hsdetect {

namespace {

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

// inf{t : F(t) >= u} for the empirical CDF of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double u) {
  auto n = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil(u * n));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

std::size_t centered_offset(std::size_t outer, std::size_t inner) {
  if (inner > outer) throw InputError("test window larger than fit region");
  return (outer - inner) / 2;
}

std::string format_level(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double mean_square_uniform(double a, double b) {
  return (a * a + a * b + b * b) / 3.0;
}

std::vector<double> oracle_pvalues(const std::vector<double>& null_sorted,
                                   const TestField& field) {
  std::vector<double> p(field.size());
  const auto n = static_cast<double>(null_sorted.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    auto it = std::upper_bound(null_sorted.begin(), null_sorted.end(), field.tmax[i]);
    p[i] = static_cast<double>(null_sorted.end() - it) / n;
  }
  return p;
}

}  // namespace

Dictionary default_study_dictionary() {
  return build_lss(gaussian_reference(), 15, 7.0, ShiftMode::IntegerBand);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  const auto n = static_cast<double>(values.size());
  s.mean = sum.value() / n;
  if (values.size() > 1) {
    CompensatedSum sq;
    for (double v : values) sq.add((v - s.mean) * (v - s.mean));
    s.se = std::sqrt(sq.value() / (n - 1.0) / n);
  }
  return s;
}

std::vector<double> monte_carlo_null(const Dictionary& dict,
                                     const NoiseModel& noise,
                                     SimilarityKind kind, std::size_t runs,
                                     std::uint64_t seed) {
  auto rng = make_rng(seed, 4);
  std::vector<double> y(dict.length()), out;
  out.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    noise.fill(rng, y);
    double best = similarity(kind, y, dict.atom(0));
    for (std::size_t j = 1; j < dict.size(); ++j)
      best = std::max(best, similarity(kind, y, dict.atom(j)));
    out.push_back(best);
  }
  std::sort(out.begin(), out.end());
  return out;
}

NullFidelityResult run_null_fidelity(const NullFidelityConfig& config,
                                     const Dictionary& dict) {
  if (config.replicates == 0 || config.mc_runs == 0)
    throw InputError("replicates and mc_runs must be positive");
  NullFidelityResult result;
  auto mc = monte_carlo_null(dict, config.noise, config.kind, config.mc_runs,
                             derive_seed(config.seed, ~0ull));
  result.mc_median = quantile_sorted(mc, 0.5);
  const double tail = quantile_sorted(mc, 0.95);
  const std::size_t n = config.side * config.side;
  result.true_pi0 =
      1.0 - std::llround((1.0 - config.pi0) * static_cast<double>(n)) / static_cast<double>(n);

  result.runs.resize(config.replicates);
  parallel_for(config.replicates, config.threads, [&](std::size_t r) {
    SimConfig sc;
    sc.ny = sc.nx = config.side;
    sc.noise = config.noise;
    sc.pi0 = config.pi0;
    sc.amp_min = config.amp_min;
    sc.amp_max = config.amp_max;
    sc.shift_draw = ShiftDraw::FixedAtom;
    sc.fixed_atom = dict.size() / 2;
    sc.seed = derive_seed(config.seed, r);
    auto [cube, truth] = generate(sc, dict);
    auto field = compute_field(cube, dict, config.kind);
    auto model = fit_null(field);

    NullFidelityRun run;
    run.pi0_hat = model.pi0_hat;
    run.mu0_hat = model.mu0_hat;
    for (double u = config.quantile_lo; u <= config.quantile_hi + 1e-12; u += 0.001)
      run.qq_max_dev = std::max(
          run.qq_max_dev, std::abs(quantile_sorted(model.pool, u) - quantile_sorted(mc, u)));
    long excess = 0;
    for (std::size_t i = 0; i < field.size(); ++i)
      excess += (field.tmax[i] > tail) - (-field.tmin[i] > tail);
    run.upper_tail_excess = static_cast<double>(excess);
    result.runs[r] = run;
  });
  return result;
}

FdrSweepResult run_fdr_sweep(const FdrSweepConfig& config,
                             const Dictionary& dict) {
  if (config.runs == 0 || config.snr_points.empty() || config.q_levels.empty())
    throw InputError("sweep needs runs, SNR points and q levels");
  const std::size_t off = centered_offset(config.fit_side, config.test_side);
  const std::size_t l = dict.length(), nq = config.q_levels.size();
  const double var = config.noise.variance();
  const double msq = mean_square_uniform(config.amp_min, config.amp_max);
  if (!(msq > 0.0)) throw InputError("amplitude range must not be all zero");

  SimConfig base;
  base.ny = base.nx = config.fit_side;
  base.noise = config.noise;
  base.kernel = variance_preserving_uniform_kernel(config.kernel_size);
  base.kernel_size = config.kernel_size;
  base.kernel_on_signal = config.kernel_on_signal;
  base.pi0 = config.pi0;
  base.shift_draw = config.shift_draw;
  base.fixed_atom = dict.size() / 2;

  std::vector<double> oracle;
  if (config.oracle) {
    std::vector<std::vector<double>> parts(config.oracle_cubes);
    parallel_for(config.oracle_cubes, config.threads, [&](std::size_t c) {
      SimConfig sc = base;
      sc.pi0 = 1.0;
      sc.seed = derive_seed(config.seed ^ 0x5eedf00dull, c);
      auto field = compute_field(generate(sc, dict).first, dict, config.kind);
      parts[c] = field.tmax;
    });
    for (auto& p : parts) oracle.insert(oracle.end(), p.begin(), p.end());
    std::sort(oracle.begin(), oracle.end());
  }

  const std::size_t total = config.snr_points.size() * config.runs;
  FdrSweepResult result;
  result.runs.resize(total);
  parallel_for(total, config.threads, [&](std::size_t task) {
    std::size_t si = task / config.runs, run = task % config.runs;
    // Expected energy per H1 pixel is scale^2 E[a^2] with unit-norm atoms.
    double scale = std::sqrt(std::pow(10.0, config.snr_points[si] / 10.0) *
                             static_cast<double>(l) * var /
                             ((1.0 - config.pi0) * msq));
    SimConfig sc = base;
    sc.amp_min = scale * config.amp_min;
    sc.amp_max = scale * config.amp_max;
    sc.seed = derive_seed(config.seed, run);
    auto [cube, truth] = generate(sc, dict);
    auto field = compute_field(cube, dict, config.kind);
    auto model = fit_null(field);
    auto test = field.window(off, off, config.test_side, config.test_side);
    auto tt = truth.window(off, off, config.test_side, config.test_side);

    FdrSweepRun rec;
    rec.snr_index = si;
    rec.run = run;
    rec.pi0_hat = model.pi0_hat;
    double energy = 0.0;
    for (double a : tt.amplitude) energy += a * a;
    rec.snr_realized = energy > 0.0 ? snr_db(energy, tt.h1.size(), l, var)
                                    : -std::numeric_limits<double>::infinity();
    rec.pi0_true = 1.0 - static_cast<double>(tt.h1_count()) / static_cast<double>(tt.h1.size());
    std::vector<double> op;
    if (config.oracle) op = oracle_pvalues(oracle, test);
    for (double q : config.q_levels) {
      auto m = score(detect(model, test, q), tt);
      rec.fdp.push_back(m.fdp);
      rec.power.push_back(m.power);
      if (config.oracle) {
        auto om = score(detect_pvalues(op, q, rec.pi0_true), tt);
        rec.oracle_fdp.push_back(om.fdp);
        rec.oracle_power.push_back(om.power);
      }
    }
    result.runs[task] = std::move(rec);
  });

  for (std::size_t si = 0; si < config.snr_points.size(); ++si)
    for (std::size_t qi = 0; qi < nq; ++qi) {
      std::vector<double> fdp, pw, ofdp, opw, snrs;
      for (std::size_t r = 0; r < config.runs; ++r) {
        const auto& rec = result.runs[si * config.runs + r];
        fdp.push_back(rec.fdp[qi]);
        pw.push_back(rec.power[qi]);
        snrs.push_back(rec.snr_realized);
        if (config.oracle) {
          ofdp.push_back(rec.oracle_fdp[qi]);
          opw.push_back(rec.oracle_power[qi]);
        }
      }
      FdrSweepCell cell;
      cell.snr_target = config.snr_points[si];
      cell.snr_realized = summarize(snrs).mean;
      cell.q = config.q_levels[qi];
      cell.fdr = summarize(fdp);
      cell.power = summarize(pw);
      cell.oracle_fdr = summarize(ofdp);
      cell.oracle_power = summarize(opw);
      result.cells.push_back(cell);
    }
  return result;
}

SourceStudyResult run_source_study(const SourceStudyConfig& config, const Dictionary& dict) {
  if (config.regions == 0) throw InputError("need at least one region");
  const std::size_t off = centered_offset(config.fit_side, config.test_side);
  const std::size_t ts = config.test_side, tn = ts * ts;
  if (config.source_pixels > tn) throw InputError("source larger than the test field");

  // Source footprint: the pixels closest to the window centre.
  const double c = (static_cast<double>(ts) - 1.0) / 2.0;
  std::vector<std::size_t> order(tn);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto dist2 = [&](std::size_t i) {
    double dy = static_cast<double>(i / ts) - c, dx = static_cast<double>(i % ts) - c;
    return dy * dy + dx * dx;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist2(a) < dist2(b); });
  order.resize(config.source_pixels);
  double rmax = 0.0;
  for (auto i : order) rmax = std::max(rmax, std::sqrt(dist2(i)));
  if (rmax == 0.0) rmax = 1.0;

  const long mid = static_cast<long>(dict.size() / 2);
  const double spacing = dict.size() > 1 ? dict.shifts()[1] - dict.shifts()[0] : 1.0;

  const std::size_t ncol = config.pfa_levels.size() + 1;
  struct RegionCounts {
    std::vector<Metrics> noise, source;
  };
  std::vector<RegionCounts> per(config.regions);
  parallel_for(config.regions, config.threads, [&](std::size_t r) {
    SimConfig sc;
    sc.ny = sc.nx = config.fit_side;
    sc.noise = config.noise;
    sc.kernel = variance_preserving_uniform_kernel(config.kernel_size);
    sc.kernel_size = config.kernel_size;
    sc.pi0 = 1.0;
    sc.seed = derive_seed(config.seed, r);
    auto [noise_cube, empty_truth] = generate(sc, dict);

    Cube source_cube = noise_cube;
    GroundTruth truth = empty_truth;
    for (auto i : order) {
      std::size_t y = off + i / ts, x = off + i % ts;
      std::size_t p = y * config.fit_side + x;
      double rad = std::sqrt(dist2(i));
      double a = config.amp_edge + (config.amp_peak - config.amp_edge) * (1.0 - rad / rmax);
      double frac = (static_cast<double>(i % ts) - c) / rmax;  // -1 west .. 1 east
      long k = mid + std::lround(config.shift_span * frac / spacing);
      k = std::clamp<long>(k, 0, static_cast<long>(dict.size()) - 1);
      auto d = dict.atom(static_cast<std::size_t>(k));
      auto s = source_cube.spectrum(p);
      for (std::size_t b = 0; b < s.size(); ++b) s[b] += a * d[b];
      truth.h1[p] = 1;
      truth.amplitude[p] = a;
      truth.atom[p] = static_cast<int>(k);
      truth.shift[p] = dict.shifts()[static_cast<std::size_t>(k)];
    }

    auto evaluate = [&](const Cube& cube, const GroundTruth& gt) {
      auto field = compute_field(cube, dict, config.kind);
      auto model = fit_null(field);
      auto test = field.window(off, off, ts, ts);
      auto tt = gt.window(off, off, ts, ts);
      std::vector<Metrics> out;
      for (double eta : config.pfa_levels)
        out.push_back(score(pfa_threshold_detect(test, model, eta), tt));
      out.push_back(score(detect(model, test, config.q), tt));
      return out;
    };
    per[r].noise = evaluate(noise_cube, empty_truth);
    per[r].source = evaluate(source_cube, truth);
  });

  SourceStudyResult result;
  result.tests = tn;
  result.source_size = config.source_pixels;
  for (std::size_t col = 0; col < ncol; ++col) {
    SourceStudyColumn out;
    out.method = col < config.pfa_levels.size()
                     ? "PFA " + format_level(config.pfa_levels[col])
                     : "FDR " + format_level(config.q);
    std::vector<double> nf, nt, sf, st, fdp, pw;
    for (const auto& rc : per) {
      nf.push_back(static_cast<double>(rc.noise[col].false_detections));
      nt.push_back(static_cast<double>(rc.noise[col].true_detections));
      sf.push_back(static_cast<double>(rc.source[col].false_detections));
      st.push_back(static_cast<double>(rc.source[col].true_detections));
      fdp.push_back(rc.source[col].fdp);
      pw.push_back(rc.source[col].power);
    }
    out.noise_false = summarize(nf).mean;
    out.noise_true = summarize(nt).mean;
    out.source_false = summarize(sf).mean;
    out.source_true = summarize(st).mean;
    out.source_fdp = summarize(fdp).mean;
    out.source_power = summarize(pw).mean;
    result.columns.push_back(out);
  }
  return result;
}

GlrCompareResult run_glr_compare(const GlrCompareConfig& config,
                                 const Dictionary& dict) {
  if (config.runs == 0 || config.q_levels.empty())
    throw InputError("comparison needs runs and q levels");
  const std::size_t off = centered_offset(config.fit_side, config.test_side);
  const GlrCalibration shared(dict, config.calibration_runs,
                              derive_seed(config.seed, ~0ull));

  GlrCompareResult result;
  result.runs.resize(config.runs);
  parallel_for(config.runs, config.threads, [&](std::size_t r) {
    SimConfig sc;
    sc.ny = sc.nx = config.fit_side;
    sc.noise = config.noise;
    sc.pi0 = config.pi0;
    sc.amp_min = config.amp_min;
    sc.amp_max = config.amp_max;
    sc.shift_draw = ShiftDraw::UniformAtom;
    sc.seed = derive_seed(config.seed, r);
    auto [cube, truth] = generate(sc, dict);
    auto field = compute_field(cube, dict, config.kind);
    auto model = fit_null(field);
    auto test = field.window(off, off, config.test_side, config.test_side);
    auto tt = truth.window(off, off, config.test_side, config.test_side);

    auto sigma = config.variance == GlrCompareConfig::Variance::Robust
                     ? robust_band_variance(cube)
                     : sample_band_variance(cube);
    std::optional<GlrCalibration> own;
    if (config.calibrate_per_run)
      own.emplace(dict, config.calibration_runs, derive_seed(sc.seed, ~0ull));
    const GlrCalibration& calibration = own ? *own : shared;
    std::vector<double> glr_p;
    for (std::size_t y = 0; y < config.test_side; ++y)
      for (std::size_t x = 0; x < config.test_side; ++x)
        glr_p.push_back(calibration.pvalue(
            glr_statistic(cube.spectrum(off + y, off + x), dict, sigma)));

    GlrCompareRun rec;
    for (double q : config.q_levels) {
      auto g = score(bh_reject(glr_p, q), tt);
      auto p = score(detect(model, test, q), tt);
      rec.glr_fdp.push_back(g.fdp);
      rec.glr_power.push_back(g.power);
      rec.prop_fdp.push_back(p.fdp);
      rec.prop_power.push_back(p.power);
    }
    result.runs[r] = std::move(rec);
  });

  for (std::size_t qi = 0; qi < config.q_levels.size(); ++qi) {
    std::vector<double> gf, gp, pf, pp;
    for (const auto& rec : result.runs) {
      gf.push_back(rec.glr_fdp[qi]);
      gp.push_back(rec.glr_power[qi]);
      pf.push_back(rec.prop_fdp[qi]);
      pp.push_back(rec.prop_power[qi]);
    }
    result.cells.push_back({config.q_levels[qi], summarize(gf), summarize(gp),
                            summarize(pf), summarize(pp)});
  }
  return result;
}

}  // namespace hsdetect
