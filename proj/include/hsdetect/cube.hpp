#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hsdetect {

/// Spectral cube of ny x nx spectra with l bands each.
///
/// Storage is row-major over pixels with bands fastest:
/// value (y, x, b) lives at ((y * nx) + x) * l + b. A pixel whose spectrum is
/// entirely NaN is masked; masked pixels are skipped by every downstream count.
class Cube {
 public:
  Cube() = default;
  Cube(std::size_t ny, std::size_t nx, std::size_t bands, double fill = 0.0);

  std::size_t ny() const { return ny_; }
  std::size_t nx() const { return nx_; }
  std::size_t bands() const { return bands_; }
  std::size_t pixels() const { return ny_ * nx_; }
  int band_origin() const { return band_origin_; }
  void set_band_origin(int origin) { band_origin_ = origin; }

  double& at(std::size_t y, std::size_t x, std::size_t b) {
    return data_[(y * nx_ + x) * bands_ + b];
  }
  double at(std::size_t y, std::size_t x, std::size_t b) const {
    return data_[(y * nx_ + x) * bands_ + b];
  }

  std::span<double> spectrum(std::size_t pixel) {
    return {data_.data() + pixel * bands_, bands_};
  }
  std::span<const double> spectrum(std::size_t pixel) const {
    return {data_.data() + pixel * bands_, bands_};
  }
  std::span<const double> spectrum(std::size_t y, std::size_t x) const {
    return spectrum(y * nx_ + x);
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool has_variance() const { return !variance_.empty(); }
  const std::vector<double>& variance() const { return variance_; }
  std::span<const double> variance_spectrum(std::size_t pixel) const {
    return {variance_.data() + pixel * bands_, bands_};
  }
  // Throws InputError if the size does not match the data block.
  void set_variance(std::vector<double> variance);
  void clear_variance() { variance_.clear(); }

  bool masked(std::size_t pixel) const;
  void mask(std::size_t pixel);
  std::size_t unmasked_count() const;

  // Enforces the NaN policy and variance positivity; throws InputError.
  void validate() const;

  // Copy of [y0, y0+h) x [x0, x0+w) x [b0, b0+nb); band_origin is shifted.
  Cube subcube(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w,
               std::size_t b0, std::size_t nb) const;

  bool operator==(const Cube& other) const;

 private:
  std::size_t ny_ = 0, nx_ = 0, bands_ = 0;
  int band_origin_ = 0;
  std::vector<double> data_;
  std::vector<double> variance_;
};

/// Convolves every band image with a k x k kernel (k odd) using half-sample
/// symmetric reflection at the borders. Masked pixels stay masked and are left
/// out of their neighbours' sums; the remaining weights are rescaled so that
/// they keep the kernel's total weight.
Cube spatial_convolve(const Cube& cube, std::span<const double> kernel,
                      std::size_t k);

}  // namespace hsdetect
