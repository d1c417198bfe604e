#include "hsdetect/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "hsdetect/error.hpp"
#include "hsdetect/io.hpp"
#include "stats.hpp"

namespace hsdetect {

FsfKernel::FsfKernel(std::vector<double> weights, std::size_t size)
    : weights_(std::move(weights)), size_(size) {
  if (size == 0 || size % 2 == 0) throw InputError("FSF size must be odd");
  if (weights_.size() != size * size)
    throw InputError("FSF must hold size^2 weights");
  double total = 0.0, scale = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w)) throw InputError("FSF weights must be finite");
    total += w;
    scale = std::max(scale, std::abs(w));
  }
  if (!(total > 0.0)) throw InputError("FSF weights must have a positive sum");
  const std::size_t n = weights_.size();
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(weights_[i] - weights_[n - 1 - i]) > 1e-12 * scale)
      throw InputError("FSF must be symmetric under 180 degree rotation");
  for (double& w : weights_) w /= total;
}

FsfKernel FsfKernel::delta() { return FsfKernel({1.0}, 1); }

FsfKernel FsfKernel::uniform(std::size_t size) {
  return FsfKernel(std::vector<double>(size * size, 1.0), size);
}

FsfKernel FsfKernel::gaussian(std::size_t size, double fwhm) {
  if (!(fwhm > 0.0)) throw InputError("FSF fwhm must be positive");
  const double s = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const long r = static_cast<long>(size / 2);
  std::vector<double> w;
  for (long dy = -r; dy <= r; ++dy)
    for (long dx = -r; dx <= r; ++dx)
      w.push_back(std::exp(-static_cast<double>(dy * dy + dx * dx) / (2.0 * s * s)));
  return FsfKernel(std::move(w), size);
}

RegionSpec::Box RegionSpec::test_box() const {
  return {center_y - half_width, center_x - half_width, 2 * half_width,
          2 * half_width};
}

RegionSpec::Box RegionSpec::fit_box() const {
  return {center_y - fit_half_width, center_x - fit_half_width,
          2 * fit_half_width, 2 * fit_half_width};
}

void RegionSpec::validate(const Cube& cube) const {
  if (half_width == 0 || half_bands == 0)
    throw InputError("region needs positive half width and half bands");
  if (fit_half_width < half_width)
    throw InputError("test region must lie inside the fit region");
  if (center_y < fit_half_width || center_x < fit_half_width ||
      center_y + fit_half_width > cube.ny() || center_x + fit_half_width > cube.nx())
    throw InputError("fit region exceeds the cube");
  if (center_band < half_bands || center_band + half_bands > cube.bands())
    throw InputError("spectral window exceeds the cube");
}

// ---- cube I/O --------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'F', 'D', 'C', '1'};
constexpr std::size_t kHeaderBytes = 24;

template <class T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const unsigned char* in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(in[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

Cube load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderBytes) throw InputError("truncated cube header");
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw InputError("bad cube magic");
  auto ny = get_le<std::uint32_t>(buf.data() + 4);
  auto nx = get_le<std::uint32_t>(buf.data() + 8);
  auto l = get_le<std::uint32_t>(buf.data() + 12);
  auto flags = get_le<std::uint32_t>(buf.data() + 16);
  auto origin = get_le<std::int32_t>(buf.data() + 20);
  if (ny == 0 || nx == 0 || l == 0) throw InputError("cube dimensions must be positive");
  if (flags & ~1u) throw InputError("unknown cube flags");
  const bool has_var = flags & 1u;
  const std::uint64_t count = std::uint64_t{ny} * nx * l;
  const std::uint64_t blocks = has_var ? 2 : 1;
  if (count > (std::uint64_t{1} << 40))
    throw InputError("cube dimensions are implausibly large");
  const std::uint64_t expect = kHeaderBytes + 8 * count * blocks;
  if (buf.size() < expect) throw InputError("truncated cube data");
  if (buf.size() > expect) throw InputError("trailing bytes after cube data");

  Cube cube(ny, nx, l);
  cube.set_band_origin(origin);
  const unsigned char* p = buf.data() + kHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i) cube.data()[i] = get_le<double>(p + 8 * i);
  if (has_var) {
    std::vector<double> var(count);
    p += 8 * count;
    for (std::uint64_t i = 0; i < count; ++i) var[i] = get_le<double>(p + 8 * i);
    cube.set_variance(std::move(var));
  }
  return cube;
}

void save_binary(const Cube& cube, const std::filesystem::path& path) {
  std::string out(kMagic, 4);
  put_le(out, static_cast<std::uint32_t>(cube.ny()));
  put_le(out, static_cast<std::uint32_t>(cube.nx()));
  put_le(out, static_cast<std::uint32_t>(cube.bands()));
  put_le(out, static_cast<std::uint32_t>(cube.has_variance() ? 1 : 0));
  put_le(out, static_cast<std::int32_t>(cube.band_origin()));
  out.reserve(out.size() + 8 * cube.data().size() * (cube.has_variance() ? 2 : 1));
  for (double v : cube.data()) put_le(out, v);
  for (double v : cube.variance()) put_le(out, v);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw InputError("write failed: " + path.string());
}

std::string band_file(const char* prefix, std::size_t b) {
  return std::string(prefix) + std::to_string(b) + ".csv";
}

Cube load_csv_dir(const std::filesystem::path& dir) {
  auto meta = read_lines(dir / "meta.csv");
  if (meta.size() < 2 || trim(meta[0]) != "ny,nx,bands,band_origin,has_variance")
    throw InputError("bad meta.csv in " + dir.string());
  auto f = split(meta[1], ',');
  if (f.size() != 5) throw InputError("bad meta.csv values");
  auto ny = parse_int(f[0]), nx = parse_int(f[1]), l = parse_int(f[2]);
  if (ny <= 0 || nx <= 0 || l <= 0) throw InputError("cube dimensions must be positive");
  bool has_var = parse_int(f[4]) != 0;
  Cube cube(static_cast<std::size_t>(ny), static_cast<std::size_t>(nx),
            static_cast<std::size_t>(l));
  cube.set_band_origin(static_cast<int>(parse_int(f[3])));
  std::vector<double> var;
  if (has_var) var.resize(cube.data().size());
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    auto read_band = [&](const std::string& name, auto&& sink) {
      std::size_t rows = 0, cols = 0;
      auto g = read_grid_csv(dir / name, rows, cols);
      if (rows != cube.ny() || cols != cube.nx())
        throw InputError(name + " does not match the cube shape");
      for (std::size_t i = 0; i < g.size(); ++i) sink(i * cube.bands() + b, g[i]);
    };
    read_band(band_file("band_", b), [&](std::size_t i, double v) { cube.data()[i] = v; });
    if (has_var)
      read_band(band_file("var_", b), [&](std::size_t i, double v) { var[i] = v; });
  }
  if (has_var) cube.set_variance(std::move(var));
  return cube;
}

void save_csv_dir(const Cube& cube, const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir) && !std::filesystem::is_directory(dir))
    throw InputError(dir.string() + " exists and is not a directory");
  std::filesystem::create_directories(dir);
  {
    std::ofstream meta(dir / "meta.csv");
    if (!meta) throw InputError("cannot write meta.csv");
    meta << "ny,nx,bands,band_origin,has_variance\n"
         << cube.ny() << ',' << cube.nx() << ',' << cube.bands() << ','
         << cube.band_origin() << ',' << (cube.has_variance() ? 1 : 0) << '\n';
  }
  std::vector<double> grid(cube.pixels());
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    for (std::size_t p = 0; p < cube.pixels(); ++p)
      grid[p] = cube.data()[p * cube.bands() + b];
    write_grid_csv(dir / band_file("band_", b), cube.ny(), cube.nx(), grid);
    if (!cube.has_variance()) continue;
    for (std::size_t p = 0; p < cube.pixels(); ++p)
      grid[p] = cube.variance()[p * cube.bands() + b];
    write_grid_csv(dir / band_file("var_", b), cube.ny(), cube.nx(), grid);
  }
}

}  // namespace

CubeFormat detect_format(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? CubeFormat::CsvDirectory
                                             : CubeFormat::Binary;
}

Cube load_cube(const std::filesystem::path& path, CubeFormat format) {
  Cube cube = format == CubeFormat::Binary ? load_binary(path) : load_csv_dir(path);
  cube.validate();
  return cube;
}

void save_cube(const Cube& cube, const std::filesystem::path& path,
               CubeFormat format) {
  if (format == CubeFormat::Binary)
    save_binary(cube, path);
  else
    save_csv_dir(cube, path);
}

// ---- preprocessing ---------------------------------------------------------

std::vector<double> moving_median(std::span<const double> values,
                                  std::size_t window) {
  if (window == 0) throw InputError("median window must be positive");
  const std::size_t n = values.size(), half = window / 2;
  std::vector<double> out(n), buf;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t lo = j >= half ? j - half : 0, hi = std::min(n, j + half + 1);
    buf.assign(values.begin() + static_cast<std::ptrdiff_t>(lo),
               values.begin() + static_cast<std::ptrdiff_t>(hi));
    out[j] = detail::median_inplace(buf);
  }
  return out;
}

Cube preprocess(const Cube& cube, const PreprocessOptions& options) {
  cube.validate();
  Cube out = cube;
  out.clear_variance();
  const std::size_t l = cube.bands(), np = cube.pixels();

  if (options.subtract_baseline)
    for (std::size_t p = 0; p < np; ++p) {
      if (cube.masked(p)) continue;
      auto s = out.spectrum(p);
      auto base = moving_median(s, options.baseline_window);
      for (std::size_t b = 0; b < l; ++b) s[b] -= base[b];
    }

  bool use_var = options.variance == VarianceReduction::Required ||
                 (options.variance == VarianceReduction::Auto && cube.has_variance());
  if (use_var) {
    if (!cube.has_variance()) throw InputError("variance reduction needs a variance cube");
    for (std::size_t i = 0; i < out.data().size(); ++i)
      if (!std::isnan(out.data()[i])) out.data()[i] /= std::sqrt(cube.variance()[i]);
  }

  std::vector<double> band, tmp;
  for (std::size_t b = 0; b < l; ++b) {
    band.clear();
    for (std::size_t p = 0; p < np; ++p)
      if (!cube.masked(p)) band.push_back(out.data()[p * l + b]);
    if (band.empty()) throw InputError("every pixel is masked");
    tmp = band;
    double med = detail::median_inplace(tmp);
    double scale = detail::kMadToSigma * detail::mad(band, med);
    if (!(scale > 0.0)) throw NumericError("degenerate band " + std::to_string(b));
    for (std::size_t p = 0; p < np; ++p)
      if (!cube.masked(p)) {
        double& v = out.data()[p * l + b];
        v = (v - med) / scale;
      }
  }

  if (options.fsf)
    out = spatial_convolve(out, options.fsf->weights(), options.fsf->size());
  return out;
}

// ---- reference and detection -----------------------------------------------

ReferenceEstimate estimate_reference(const Cube& cube, const RegionSpec& region,
                                     std::size_t n_center_pixels) {
  if (n_center_pixels == 0) throw InputError("need at least one centre pixel");
  region.validate(cube);
  auto box = region.test_box();
  const std::size_t b0 = region.band_start(), nb = region.band_count();

  std::vector<std::pair<double, std::size_t>> flux;
  for (std::size_t y = box.y0; y < box.y0 + box.h; ++y)
    for (std::size_t x = box.x0; x < box.x0 + box.w; ++x) {
      std::size_t p = y * cube.nx() + x;
      if (cube.masked(p)) continue;
      auto s = cube.spectrum(p);
      flux.emplace_back(std::accumulate(s.begin() + static_cast<std::ptrdiff_t>(b0),
                                        s.begin() + static_cast<std::ptrdiff_t>(b0 + nb), 0.0),
                        p);
    }
  if (flux.size() < n_center_pixels)
    throw InputError("fewer unmasked pixels than requested centre pixels");
  std::stable_sort(flux.begin(), flux.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<double> avg(nb, 0.0);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < n_center_pixels; ++i) {
    auto s = cube.spectrum(flux[i].second);
    for (std::size_t b = 0; b < nb; ++b) avg[b] += s[b0 + b];
    chosen.push_back(flux[i].second);
  }
  for (double& v : avg) v /= static_cast<double>(n_center_pixels);
  return {ReferenceAtom(std::move(avg), static_cast<int>(region.half_bands)),
          std::move(chosen)};
}

ReferenceAtom clip_negative(const ReferenceAtom& reference) {
  std::vector<double> v = reference.values();
  for (double& x : v) x = std::max(x, 0.0);
  return ReferenceAtom(std::move(v), reference.center_band());
}

RunOutput run_detection(const Cube& cube, const RegionSpec& region,
                        const DictParams& dict_params,
                        const RunOptions& options) {
  region.validate(cube);
  auto fit = region.fit_box();
  auto test = region.test_box();
  const std::size_t b0 = region.band_start(), nb = region.band_count();

  std::vector<std::size_t> ref_pixels;
  auto dict = [&]() -> Dictionary {
    if (dict_params.dictionary) {
      if (dict_params.dictionary->length() != nb)
        throw InputError("dictionary length does not match the spectral window");
      return *dict_params.dictionary;
    }
    std::optional<ReferenceAtom> ref = dict_params.reference;
    if (!ref) {
      auto est = estimate_reference(cube, region, dict_params.n_center_pixels);
      ref = clip_negative(est.atom);
      ref_pixels = std::move(est.pixels);
    }
    if (ref->length() != nb)
      throw InputError("reference length does not match the spectral window");
    return build_lss(*ref, dict_params.m, dict_params.tau, dict_params.mode);
  }();

  RunOutput out{dict, {}, {}, {}, {}, {}, test.h, test.w};
  if (options.null_model) {
    out.null_model = *options.null_model;
    Cube sub = cube.subcube(test.y0, test.x0, test.h, test.w, b0, nb);
    out.test_field = compute_field(sub, dict, options.kind, options.threads);
  } else {
    Cube sub = cube.subcube(fit.y0, fit.x0, fit.h, fit.w, b0, nb);
    TestField fit_field = compute_field(sub, dict, options.kind, options.threads);
    out.null_model = fit_null(fit_field);
    out.test_field = fit_field.window(test.y0 - fit.y0, test.x0 - fit.x0, test.h, test.w);
  }
  out.result = detect(out.null_model, out.test_field, options.q, options.pi0);
  for (double level : options.contour_levels)
    out.contours[level] =
        detect(out.null_model, out.test_field, level, options.pi0).detected;
  for (std::size_t p : ref_pixels) {
    std::size_t y = p / cube.nx(), x = p % cube.nx();
    out.reference_pixels.push_back((y - test.y0) * test.w + (x - test.x0));
  }
  return out;
}

}  // namespace hsdetect
