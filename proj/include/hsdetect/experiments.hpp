#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hsdetect/simulate.hpp"

namespace hsdetect {

/// Dictionary shared by the validation studies: the truncated Gaussian line,
/// 15 atoms over +-7 bands, integer shifts.
Dictionary default_study_dictionary();

// Pooled mean and standard error of a per-run quantity.
struct Summary {
  double mean = 0.0;
  double se = 0.0;
};
Summary summarize(const std::vector<double>& values);

// ---- Null estimator fidelity on independent samples -----------------------

struct NullFidelityConfig {
  std::size_t side = 50;  // side x side independent spectra
  NoiseModel noise = NoiseModel::student(5.0);
  double pi0 = 0.81;
  double amp_min = 0.1, amp_max = 3.0;
  SimilarityKind kind = SimilarityKind::SpectralAngle;
  std::size_t replicates = 100;
  std::size_t mc_runs = 100000;
  double quantile_lo = 0.005, quantile_hi = 0.995;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct NullFidelityRun {
  double pi0_hat = 0.0;
  double mu0_hat = 0.0;
  double qq_max_dev = 0.0;   // over the central quantile band
  double upper_tail_excess = 0.0;  // #{tmax > c} - #{-tmin > c}
};

struct NullFidelityResult {
  std::vector<NullFidelityRun> runs;
  double true_pi0 = 0.0;
  double mc_median = 0.0;
};

NullFidelityResult run_null_fidelity(const NullFidelityConfig& config,
                                     const Dictionary& dict);

/// Max-statistic null sample from pure-noise spectra (no spatial kernel).
std::vector<double> monte_carlo_null(const Dictionary& dict,
                                     const NoiseModel& noise,
                                     SimilarityKind kind, std::size_t runs,
                                     std::uint64_t seed);

// ---- FDR versus SNR on spatially correlated cubes -------------------------

struct FdrSweepConfig {
  std::size_t fit_side = 200, test_side = 51;
  NoiseModel noise = NoiseModel::student(5.0);
  std::size_t kernel_size = 3;
  bool kernel_on_signal = false;
  double pi0 = 0.81;
  double amp_min = 0.1, amp_max = 3.0;  // scaled per SNR point
  std::vector<double> snr_points = {-20.0, -15.0, -10.0, -5.0};
  std::vector<double> q_levels = {0.02, 0.05, 0.1, 0.2};
  SimilarityKind kind = SimilarityKind::SpectralAngle;
  ShiftDraw shift_draw = ShiftDraw::FixedAtom;
  std::size_t runs = 500;
  bool oracle = true;
  std::size_t oracle_cubes = 3;  // pure-noise fit cubes pooled into F0
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct FdrSweepRun {
  std::size_t snr_index = 0, run = 0;
  double snr_realized = 0.0;
  double pi0_hat = 0.0, pi0_true = 0.0;
  std::vector<double> fdp, power, oracle_fdp, oracle_power;  // per q level
};

struct FdrSweepCell {
  double snr_target = 0.0, snr_realized = 0.0, q = 0.0;
  Summary fdr, power, oracle_fdr, oracle_power;
};

struct FdrSweepResult {
  std::vector<FdrSweepRun> runs;
  std::vector<FdrSweepCell> cells;  // snr-major, then q
};

FdrSweepResult run_fdr_sweep(const FdrSweepConfig& config,
                             const Dictionary& dict);

// ---- PFA versus FDR on 50 x 50 fields with a compact source ---------------

struct SourceStudyConfig {
  std::size_t regions = 5;
  std::size_t fit_side = 200, test_side = 50;
  NoiseModel noise = NoiseModel::gaussian(1.0);
  std::size_t kernel_size = 3;
  std::size_t source_pixels = 185;
  double amp_peak = 7.0, amp_edge = 2.5;  // linear radial falloff
  double shift_span = 3.0;  // bands of shift across the source, west to east
  std::vector<double> pfa_levels = {0.05, 0.001};
  double q = 0.2;
  SimilarityKind kind = SimilarityKind::SpectralAngle;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct SourceStudyColumn {
  std::string method;
  double noise_false = 0.0;  // mean over regions
  double noise_true = 0.0;
  double source_false = 0.0;
  double source_true = 0.0;
  double source_fdp = 0.0;   // mean of per-region FDP
  double source_power = 0.0;
};

struct SourceStudyResult {
  std::vector<SourceStudyColumn> columns;  // PFA levels in order, then FDR
  std::size_t tests = 0, source_size = 0;
};

SourceStudyResult run_source_study(const SourceStudyConfig& config, const Dictionary& dict);

// ---- GLR versus the empirical-null procedure ------------------------------

struct GlrCompareConfig {
  std::size_t fit_side = 200, test_side = 51;
  NoiseModel noise = NoiseModel::gaussian(1.0);
  double pi0 = 0.97;
  // Chosen so that the empirical-null method keeps real power under
  // Student(4) noise; at 2..6 it detects almost nothing there.
  double amp_min = 5.0, amp_max = 15.0;
  std::vector<double> q_levels = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4};
  SimilarityKind kind = SimilarityKind::MatchedFilter;
  // How the GLR estimates its diagonal covariance from each cube.
  enum class Variance { Robust, Sample };
  Variance variance = Variance::Robust;
  std::size_t calibration_runs = 10000;
  // Fresh calibration sample per run instead of one shared sample.
  bool calibrate_per_run = true;
  std::size_t runs = 200;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct GlrCompareRun {
  std::vector<double> glr_fdp, glr_power, prop_fdp, prop_power;
};

struct GlrCompareCell {
  double q = 0.0;
  Summary glr_fdr, glr_power, prop_fdr, prop_power;
};

struct GlrCompareResult {
  std::vector<GlrCompareRun> runs;
  std::vector<GlrCompareCell> cells;
};

GlrCompareResult run_glr_compare(const GlrCompareConfig& config,
                                 const Dictionary& dict);

}  // namespace hsdetect
