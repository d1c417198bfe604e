#include "hsdetect/cube.hpp"

#include <cmath>
#include <string>

#include "hsdetect/error.hpp"

namespace hsdetect {

Cube::Cube(std::size_t ny, std::size_t nx, std::size_t bands, double fill)
    : ny_(ny), nx_(nx), bands_(bands), data_(ny * nx * bands, fill) {
  if (ny == 0 || nx == 0 || bands == 0)
    throw InputError("cube dimensions must be positive");
}

void Cube::set_variance(std::vector<double> variance) {
  if (variance.size() != data_.size())
    throw InputError("variance size does not match data");
  variance_ = std::move(variance);
}

bool Cube::masked(std::size_t pixel) const {
  return std::isnan(data_[pixel * bands_]);
}

void Cube::mask(std::size_t pixel) {
  for (double& v : spectrum(pixel)) v = std::nan("");
}

std::size_t Cube::unmasked_count() const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < pixels(); ++p) n += !masked(p);
  return n;
}

void Cube::validate() const {
  for (std::size_t p = 0; p < pixels(); ++p) {
    auto s = spectrum(p);
    std::size_t nans = 0;
    for (double v : s) {
      if (std::isnan(v))
        ++nans;
      else if (!std::isfinite(v))
        throw InputError("infinite value at pixel " + std::to_string(p));
    }
    if (nans != 0 && nans != bands_)
      throw InputError("partially NaN spectrum at pixel " + std::to_string(p));
    if (nans || variance_.empty()) continue;
    for (double v : variance_spectrum(p))
      if (!(v > 0.0) || !std::isfinite(v))
        throw InputError("non-positive variance at pixel " + std::to_string(p));
  }
}

Cube Cube::subcube(std::size_t y0, std::size_t x0, std::size_t h,
                   std::size_t w, std::size_t b0, std::size_t nb) const {
  if (y0 + h > ny_ || x0 + w > nx_ || b0 + nb > bands_)
    throw InputError("subcube exceeds cube bounds");
  Cube out(h, w, nb);
  out.band_origin_ = band_origin_ + static_cast<int>(b0);
  std::vector<double> var;
  if (has_variance()) var.resize(h * w * nb);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t src = ((y0 + y) * nx_ + (x0 + x)) * bands_ + b0;
      std::size_t dst = (y * w + x) * nb;
      for (std::size_t b = 0; b < nb; ++b) {
        out.data_[dst + b] = data_[src + b];
        if (!var.empty()) var[dst + b] = variance_[src + b];
      }
    }
  if (!var.empty()) out.variance_ = std::move(var);
  return out;
}

static bool same_bits(const std::vector<double>& a,
                      const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) && std::isnan(b[i])) continue;
    if (a[i] != b[i] || std::signbit(a[i]) != std::signbit(b[i])) return false;
  }
  return true;
}

bool Cube::operator==(const Cube& o) const {
  return ny_ == o.ny_ && nx_ == o.nx_ && bands_ == o.bands_ &&
         band_origin_ == o.band_origin_ && same_bits(data_, o.data_) &&
         same_bits(variance_, o.variance_);
}

namespace {

// Half-sample symmetric reflection: ... c b a | a b c ... | c b a ...
std::size_t reflect(long i, long n) {
  long period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - 1 - i);
}

}  // namespace

Cube spatial_convolve(const Cube& cube, std::span<const double> kernel,
                      std::size_t k) {
  if (k == 0 || k % 2 == 0 || kernel.size() != k * k)
    throw InputError("kernel must be k x k with odd k");
  double total = 0.0;
  for (double w : kernel) total += w;

  const long ny = static_cast<long>(cube.ny()), nx = static_cast<long>(cube.nx());
  const long r = static_cast<long>(k / 2);
  const std::size_t l = cube.bands();
  Cube out(cube.ny(), cube.nx(), l);
  out.set_band_origin(cube.band_origin());

  std::vector<double> acc(l);
  for (long y = 0; y < ny; ++y)
    for (long x = 0; x < nx; ++x) {
      std::size_t p = static_cast<std::size_t>(y * nx + x);
      if (cube.masked(p)) {
        out.mask(p);
        continue;
      }
      std::fill(acc.begin(), acc.end(), 0.0);
      double used = 0.0;
      for (long dy = -r; dy <= r; ++dy)
        for (long dx = -r; dx <= r; ++dx) {
          std::size_t q = reflect(y + dy, ny) * cube.nx() + reflect(x + dx, nx);
          if (cube.masked(q)) continue;
          double w = kernel[static_cast<std::size_t>((dy + r) * static_cast<long>(k) + dx + r)];
          used += w;
          auto s = cube.spectrum(q);
          for (std::size_t b = 0; b < l; ++b) acc[b] += w * s[b];
        }
      double scale = (used == total || used == 0.0) ? 1.0 : total / used;
      auto dst = out.spectrum(p);
      for (std::size_t b = 0; b < l; ++b) dst[b] = acc[b] * scale;
    }
  return out;
}

}  // namespace hsdetect
