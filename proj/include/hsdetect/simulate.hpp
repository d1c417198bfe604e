#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hsdetect/cube.hpp"
#include "hsdetect/dictionary.hpp"
#include "hsdetect/fdr.hpp"
#include "hsdetect/nullmodel.hpp"
#include "hsdetect/similarity.hpp"
#include "hsdetect/teststat.hpp"

namespace hsdetect {

struct NoiseModel {
  enum class Kind { Gaussian, Student };
  Kind kind = Kind::Gaussian;
  double sigma = 1.0;  // Gaussian scale
  double nu = 5.0;     // Student degrees of freedom, unit scale

  static NoiseModel gaussian(double sigma = 1.0) {
    return {Kind::Gaussian, sigma, 5.0};
  }
  static NoiseModel student(double nu) { return {Kind::Student, 1.0, nu}; }
  // Marginal variance; Student requires nu > 2.
  double variance() const;
  double draw(std::mt19937_64& rng) const;
  void fill(std::mt19937_64& rng, std::span<double> out) const;
};

// Which atom each H1 pixel receives.
enum class ShiftDraw { FixedAtom, UniformAtom };

struct SimConfig {
  std::size_t ny = 50, nx = 50;
  NoiseModel noise = NoiseModel::student(5.0);
  // k x k weights applied per band; empty means no spatial correlation.
  std::vector<double> kernel;
  std::size_t kernel_size = 0;
  bool kernel_on_signal = false;
  double pi0 = 0.81;
  double amp_min = 0.1, amp_max = 3.0;
  ShiftDraw shift_draw = ShiftDraw::FixedAtom;
  std::size_t fixed_atom = 0;
  std::uint64_t seed = 1;

  void validate(const Dictionary& dict) const;
};

struct GroundTruth {
  std::size_t rows = 0, cols = 0;
  std::vector<std::uint8_t> h1;
  std::vector<double> amplitude;  // 0 under H0
  std::vector<double> shift;      // NaN under H0
  std::vector<int> atom;          // -1 under H0

  std::size_t h1_count() const;
  GroundTruth window(std::size_t y0, std::size_t x0, std::size_t h,
                     std::size_t w) const;
};

/// Uniform k x k kernel scaled so that its squared weights sum to 1, which
/// keeps the marginal noise variance unchanged.
std::vector<double> variance_preserving_uniform_kernel(std::size_t k);

// Engine seeded from (seed, stream) through std::seed_seq.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);
// Independent 64-bit seed for replicate `index`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// round((1 - pi0) n) H1 pixels at shuffled positions, amplitudes uniform on
/// [amp_min, amp_max]. Bit-identical for identical config and dictionary.
std::pair<Cube, GroundTruth> generate(const SimConfig& config,
                                      const Dictionary& dict);

/// 10 log10(A / (n l sigma^2)) with sigma^2 the noise marginal variance.
double snr(const SimConfig& config, std::size_t bands, double signal_energy);
double snr_db(double signal_energy, std::size_t pixels, std::size_t bands,
              double noise_variance);

/// Best non-negative 1-sparse whitened score
/// max_j d_j' S^-1 y / sqrt(d_j' S^-1 d_j). When no atom has a positive
/// score the least negative score is returned, which is the same maximum.
double glr_statistic(std::span<const double> y, const Dictionary& dict,
                     std::span<const double> sigma_diag);

/// Null sample of the GLR statistic under N(0, I) noise.
class GlrCalibration {
 public:
  GlrCalibration(const Dictionary& dict, std::size_t runs, std::uint64_t seed);
  explicit GlrCalibration(std::vector<double> null_sample);
  // #{null >= t} / N
  double pvalue(double t) const;
  const std::vector<double>& sample() const { return sample_; }

 private:
  std::vector<double> sample_;
};

/// Per-band robust variance (1.4826 MAD)^2 over the unmasked pixels.
std::vector<double> robust_band_variance(const Cube& cube);

/// Per-band unbiased sample variance over the unmasked pixels.
std::vector<double> sample_band_variance(const Cube& cube);

/// Uncorrected per-pixel decision p < eta with empirical p-values; eta = 1
/// selects every tested pixel.
std::vector<std::uint8_t> pfa_threshold_detect(const TestField& field,
                                               const NullModel& model,
                                               double eta);

struct Metrics {
  std::size_t false_detections = 0;
  std::size_t true_detections = 0;
  double fdp = 0.0;    // U / max(R, 1)
  double power = 0.0;  // true detections / #H1, 0 when there is no H1 pixel
};

Metrics score(std::span<const std::uint8_t> detected, const GroundTruth& truth);
Metrics score(const DetectionResult& result, const GroundTruth& truth);

}  // namespace hsdetect
