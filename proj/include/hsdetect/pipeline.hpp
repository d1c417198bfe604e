#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsdetect/cube.hpp"
#include "hsdetect/dictionary.hpp"
#include "hsdetect/fdr.hpp"
#include "hsdetect/nullmodel.hpp"
#include "hsdetect/similarity.hpp"
#include "hsdetect/teststat.hpp"

namespace hsdetect {

/// Spatial response used to boost SNR; symmetric under 180 degree rotation,
/// normalized to unit sum.
class FsfKernel {
 public:
  FsfKernel(std::vector<double> weights, std::size_t size);
  static FsfKernel delta();
  static FsfKernel uniform(std::size_t size);
  static FsfKernel gaussian(std::size_t size, double fwhm);

  std::size_t size() const { return size_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
  std::size_t size_;
};

struct RegionSpec {
  std::size_t center_y = 0, center_x = 0;
  std::size_t center_band = 0;
  std::size_t half_width = 25;       // test region 2 * 25 = 50 pixels wide
  std::size_t half_bands = 15;       // 30 bands
  std::size_t fit_half_width = 100;  // 200 x 200 fit region

  struct Box {
    std::size_t y0, x0, h, w;
  };
  // Rows/cols [c - hw, c + hw); bands [cb - hb, cb + hb).
  Box test_box() const;
  Box fit_box() const;
  std::size_t band_start() const { return center_band - half_bands; }
  std::size_t band_count() const { return 2 * half_bands; }
  // Throws InputError unless test box ⊆ fit box ⊆ cube.
  void validate(const Cube& cube) const;
};

enum class CubeFormat { Binary, CsvDirectory };

/// Binary layout, little endian: "FDC1", u32 ny, u32 nx, u32 l, u32 flags
/// (bit 0: variance block follows), i32 band_origin, then ny*nx*l doubles,
/// then the variance block if flagged. The CSV directory holds meta.csv and
/// one band_<b>.csv grid per band (plus var_<b>.csv when present).
Cube load_cube(const std::filesystem::path& path, CubeFormat format);
void save_cube(const Cube& cube, const std::filesystem::path& path,
               CubeFormat format);
// Binary for regular files, CSV directory for directories.
CubeFormat detect_format(const std::filesystem::path& path);

enum class VarianceReduction { Auto, Required, Off };

struct PreprocessOptions {
  bool subtract_baseline = false;
  std::size_t baseline_window = 101;
  VarianceReduction variance = VarianceReduction::Auto;
  std::optional<FsfKernel> fsf;
};

/// baseline -> divide by sqrt(variance) -> per-band (x - median) / (1.4826 MAD)
/// -> FSF. The output carries no variance block. Throws
/// NumericError("degenerate band") on a zero MAD.
Cube preprocess(const Cube& cube, const PreprocessOptions& options);

// Running median over bands, window truncated at the spectrum ends.
std::vector<double> moving_median(std::span<const double> values,
                                  std::size_t window);

struct ReferenceEstimate {
  ReferenceAtom atom;
  std::vector<std::size_t> pixels;  // cube pixel indices, brightest first
};

/// Averages the n brightest test-region pixels (window flux) over the band
/// window and normalizes. Ties go to row-major order.
ReferenceEstimate estimate_reference(const Cube& cube, const RegionSpec& region,
                                     std::size_t n_center_pixels = 5);

struct DictParams {
  std::size_t m = 15;
  double tau = 7.0;
  ShiftMode mode = ShiftMode::IntegerBand;
  std::size_t n_center_pixels = 5;
  std::optional<ReferenceAtom> reference;  // estimated when absent
  std::optional<Dictionary> dictionary;    // overrides everything above
};

struct RunOptions {
  double q = 0.2;
  SimilarityKind kind = SimilarityKind::SpectralAngle;
  Pi0Choice pi0{};
  std::optional<NullModel> null_model;  // skips the fit when present
  std::vector<double> contour_levels = {0.05, 0.1, 0.2, 0.4};
  unsigned threads = 1;
};

struct RunOutput {
  Dictionary dictionary;
  NullModel null_model;
  TestField test_field;
  DetectionResult result;
  std::map<double, std::vector<std::uint8_t>> contours;
  // Test-region pixel indices used to build the reference; they are tested
  // like any other pixel.
  std::vector<std::size_t> reference_pixels;
  std::size_t rows = 0, cols = 0;
};

RunOutput run_detection(const Cube& cube, const RegionSpec& region,
                        const DictParams& dict_params,
                        const RunOptions& options);

/// Clipped, renormalized copy used to build dictionaries from estimated
/// references, which can dip below zero in noisy bands.
ReferenceAtom clip_negative(const ReferenceAtom& reference);

}  // namespace hsdetect
