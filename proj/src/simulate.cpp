#include "hsdetect/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hsdetect/error.hpp"
#include "hsdetect/similarity.hpp"
#include "stats.hpp"

namespace hsdetect {

double NoiseModel::variance() const {
  if (kind == Kind::Gaussian) return sigma * sigma;
  if (!(nu > 2.0)) throw InputError("Student noise needs nu > 2 for a variance");
  return nu / (nu - 2.0);
}

double NoiseModel::draw(std::mt19937_64& rng) const {
  if (kind == Kind::Gaussian) return std::normal_distribution<double>(0.0, sigma)(rng);
  return std::student_t_distribution<double>(nu)(rng);
}

void NoiseModel::fill(std::mt19937_64& rng, std::span<double> out) const {
  if (kind == Kind::Gaussian) {
    std::normal_distribution<double> d(0.0, sigma);
    for (double& v : out) v = d(rng);
  } else {
    std::student_t_distribution<double> d(nu);
    for (double& v : out) v = d(rng);
  }
}

std::size_t GroundTruth::h1_count() const {
  return static_cast<std::size_t>(std::count(h1.begin(), h1.end(), 1));
}

GroundTruth GroundTruth::window(std::size_t y0, std::size_t x0, std::size_t h,
                                std::size_t w) const {
  if (y0 + h > rows || x0 + w > cols) throw InputError("window exceeds truth");
  GroundTruth t;
  t.rows = h;
  t.cols = w;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t i = (y0 + y) * cols + x0 + x;
      t.h1.push_back(h1[i]);
      t.amplitude.push_back(amplitude[i]);
      t.shift.push_back(shift[i]);
      t.atom.push_back(atom[i]);
    }
  return t;
}

std::vector<double> variance_preserving_uniform_kernel(std::size_t k) {
  if (k == 0 || k % 2 == 0) throw InputError("kernel size must be odd");
  return std::vector<double>(k * k, 1.0 / static_cast<double>(k));
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return make_rng(seed, index)();
}

void SimConfig::validate(const Dictionary& dict) const {
  if (ny == 0 || nx == 0) throw InputError("empty pixel grid");
  if (!(pi0 > 0.0 && pi0 <= 1.0)) throw InputError("pi0 must lie in (0, 1]");
  if (!(amp_min >= 0.0 && amp_max >= amp_min))
    throw InputError("amplitude range must satisfy 0 <= min <= max");
  noise.variance();
  if (noise.kind == NoiseModel::Kind::Gaussian && !(noise.sigma > 0.0))
    throw InputError("Gaussian sigma must be positive");
  if (!kernel.empty()) {
    if (kernel.size() != kernel_size * kernel_size)
      throw InputError("kernel must hold kernel_size^2 weights");
    double total = 0.0;
    for (double w : kernel) total += w;
    if (!std::isfinite(total)) throw InputError("kernel weights must be finite");
  }
  if (shift_draw == ShiftDraw::FixedAtom && fixed_atom >= dict.size())
    throw InputError("fixed atom index out of range");
}

std::pair<Cube, GroundTruth> generate(const SimConfig& config,
                                      const Dictionary& dict) {
  config.validate(dict);
  const std::size_t n = config.ny * config.nx, l = dict.length();
  Cube cube(config.ny, config.nx, l);
  auto noise_rng = make_rng(config.seed, 1);
  config.noise.fill(noise_rng, cube.data());

  GroundTruth truth;
  truth.rows = config.ny;
  truth.cols = config.nx;
  truth.h1.assign(n, 0);
  truth.amplitude.assign(n, 0.0);
  truth.shift.assign(n, std::numeric_limits<double>::quiet_NaN());
  truth.atom.assign(n, -1);

  auto sig_rng = make_rng(config.seed, 2);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), sig_rng);
  auto n1 = static_cast<std::size_t>(std::llround((1.0 - config.pi0) * static_cast<double>(n)));
  std::uniform_real_distribution<double> amp(config.amp_min, config.amp_max);
  std::uniform_int_distribution<std::size_t> pick(0, dict.size() - 1);
  for (std::size_t i = 0; i < n1; ++i) {
    std::size_t p = order[i];
    truth.h1[p] = 1;
    truth.amplitude[p] = amp(sig_rng);
    std::size_t k = config.shift_draw == ShiftDraw::FixedAtom ? config.fixed_atom
                                                             : pick(sig_rng);
    truth.atom[p] = static_cast<int>(k);
    truth.shift[p] = dict.shifts()[k];
  }

  auto add_signal = [&](Cube& c) {
    for (std::size_t p = 0; p < n; ++p) {
      if (!truth.h1[p]) continue;
      auto s = c.spectrum(p);
      auto d = dict.atom(static_cast<std::size_t>(truth.atom[p]));
      for (std::size_t b = 0; b < l; ++b) s[b] += truth.amplitude[p] * d[b];
    }
  };
  if (config.kernel.empty()) {
    add_signal(cube);
  } else if (config.kernel_on_signal) {
    add_signal(cube);
    cube = spatial_convolve(cube, config.kernel, config.kernel_size);
  } else {
    cube = spatial_convolve(cube, config.kernel, config.kernel_size);
    add_signal(cube);
  }
  return {std::move(cube), std::move(truth)};
}

double snr_db(double signal_energy, std::size_t pixels, std::size_t bands,
              double noise_variance) {
  if (!(noise_variance > 0.0)) throw InputError("noise variance must be positive");
  return 10.0 * std::log10(signal_energy / (static_cast<double>(pixels * bands) *
                                            noise_variance));
}

double snr(const SimConfig& config, std::size_t bands, double signal_energy) {
  return snr_db(signal_energy, config.ny * config.nx, bands, config.noise.variance());
}

double glr_statistic(std::span<const double> y, const Dictionary& dict,
                     std::span<const double> sigma_diag) {
  const std::size_t l = dict.length();
  if (y.size() != l || sigma_diag.size() != l)
    throw InputError("GLR: spectrum, atoms and variances differ in length");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < dict.size(); ++j) {
    auto d = dict.atom(j);
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < l; ++b) {
      num += d[b] * y[b] / sigma_diag[b];
      den += d[b] * d[b] / sigma_diag[b];
    }
    best = std::max(best, num / std::sqrt(den));
  }
  return best;
}

GlrCalibration::GlrCalibration(const Dictionary& dict, std::size_t runs,
                               std::uint64_t seed) {
  if (runs == 0) throw InputError("calibration needs at least one run");
  auto rng = make_rng(seed, 3);
  std::normal_distribution<double> gauss;
  std::vector<double> ones(dict.length(), 1.0), e(dict.length());
  sample_.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    for (double& v : e) v = gauss(rng);
    sample_.push_back(glr_statistic(e, dict, ones));
  }
  std::sort(sample_.begin(), sample_.end());
}

GlrCalibration::GlrCalibration(std::vector<double> null_sample)
    : sample_(std::move(null_sample)) {
  if (sample_.empty()) throw InputError("empty calibration sample");
  std::sort(sample_.begin(), sample_.end());
}

double GlrCalibration::pvalue(double t) const {
  auto it = std::lower_bound(sample_.begin(), sample_.end(), t);
  return static_cast<double>(sample_.end() - it) / static_cast<double>(sample_.size());
}

std::vector<double> robust_band_variance(const Cube& cube) {
  std::vector<double> out(cube.bands());
  std::vector<double> v;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    v.clear();
    for (std::size_t p = 0; p < cube.pixels(); ++p)
      if (!cube.masked(p)) v.push_back(cube.spectrum(p)[b]);
    if (v.empty()) throw InputError("no unmasked pixels");
    std::vector<double> tmp = v;
    double med = detail::median_inplace(tmp);
    double s = detail::kMadToSigma * detail::mad(v, med);
    if (!(s > 0.0)) throw NumericError("degenerate band " + std::to_string(b));
    out[b] = s * s;
  }
  return out;
}

std::vector<double> sample_band_variance(const Cube& cube) {
  std::vector<double> out(cube.bands());
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < cube.pixels(); ++p) {
      if (cube.masked(p)) continue;
      double x = cube.spectrum(p)[b], delta = x - mean;
      mean += delta / static_cast<double>(++n);
      m2 += delta * (x - mean);
    }
    if (n < 2) throw InputError("sample variance needs two unmasked pixels");
    out[b] = m2 / static_cast<double>(n - 1);
    if (!(out[b] > 0.0)) throw NumericError("degenerate band " + std::to_string(b));
  }
  return out;
}

std::vector<std::uint8_t> pfa_threshold_detect(const TestField& field,
                                               const NullModel& model,
                                               double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InputError("eta must lie in (0, 1]");
  auto p = empirical_pvalues(model, field);
  std::vector<std::uint8_t> d(p.size(), 0);
  for (std::size_t i = 0; i < p.size(); ++i)
    d[i] = !std::isnan(p[i]) && (p[i] < eta || eta == 1.0);
  return d;
}

Metrics score(std::span<const std::uint8_t> detected, const GroundTruth& truth) {
  if (detected.size() != truth.h1.size())
    throw InputError("detection map and truth differ in size");
  Metrics m;
  std::size_t h1 = 0;
  for (std::size_t i = 0; i < detected.size(); ++i) {
    h1 += truth.h1[i];
    if (!detected[i]) continue;
    (truth.h1[i] ? m.true_detections : m.false_detections)++;
  }
  std::size_t r = m.true_detections + m.false_detections;
  m.fdp = static_cast<double>(m.false_detections) / static_cast<double>(std::max<std::size_t>(r, 1));
  m.power = h1 ? static_cast<double>(m.true_detections) / static_cast<double>(h1) : 0.0;
  return m;
}

Metrics score(const DetectionResult& result, const GroundTruth& truth) {
  return score(result.detected, truth);
}

}  // namespace hsdetect
