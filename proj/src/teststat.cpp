#include "hsdetect/teststat.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <utility>

#include "hsdetect/error.hpp"
#include "hsdetect/io.hpp"
#include "hsdetect/parallel.hpp"

namespace hsdetect {

std::size_t TestField::tested() const {
  std::size_t n = 0;
  for (auto v : valid) n += v;
  return n;
}

TestField TestField::from_values(std::size_t rows, std::size_t cols,
                                 std::vector<double> tmax,
                                 std::vector<double> tmin) {
  if (tmax.size() != rows * cols || tmin.size() != rows * cols)
    throw InputError("field shape mismatch");
  TestField f;
  f.rows = rows;
  f.cols = cols;
  f.argmax.assign(rows * cols, 0);
  f.valid.assign(rows * cols, 1);
  for (std::size_t i = 0; i < tmax.size(); ++i)
    if (std::isnan(tmax[i]) || std::isnan(tmin[i])) {
      f.valid[i] = 0;
      f.argmax[i] = -1;
    }
  f.tmax = std::move(tmax);
  f.tmin = std::move(tmin);
  return f;
}

TestField TestField::window(std::size_t y0, std::size_t x0, std::size_t h,
                            std::size_t w) const {
  if (y0 + h > rows || x0 + w > cols) throw InputError("window exceeds field");
  TestField f;
  f.rows = h;
  f.cols = w;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t i = (y0 + y) * cols + x0 + x;
      f.tmax.push_back(tmax[i]);
      f.tmin.push_back(tmin[i]);
      f.argmax.push_back(argmax[i]);
      f.valid.push_back(valid[i]);
    }
  return f;
}

void TestField::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "row,col,tmax,tmin,argmax\n";
  for (std::size_t i = 0; i < size(); ++i)
    out << i / cols << ',' << i % cols << ',' << format_double(tmax[i]) << ','
        << format_double(tmin[i]) << ',' << argmax[i] << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

TestField TestField::load_csv(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "row,col,tmax,tmin,argmax")
    throw InputError("not a test-field file: " + path.string());
  struct Row {
    double tmax, tmin;
    int argmax;
  };
  std::map<std::pair<long long, long long>, Row> cells;
  long long rmax = -1, cmax = -1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto f = split(lines[i], ',');
    if (f.size() != 5) throw InputError("bad field row " + std::to_string(i));
    long long r = parse_int(f[0]), c = parse_int(f[1]);
    if (r < 0 || c < 0) throw InputError("negative pixel index");
    if (!cells.emplace(std::pair{r, c}, Row{parse_double(f[2]), parse_double(f[3]),
                                            static_cast<int>(parse_int(f[4]))})
             .second)
      throw InputError("duplicate pixel in field file");
    rmax = std::max(rmax, r);
    cmax = std::max(cmax, c);
  }
  std::size_t rows = static_cast<std::size_t>(rmax + 1),
              cols = static_cast<std::size_t>(cmax + 1);
  if (cells.size() != rows * cols)
    throw InputError("field file does not cover a full grid");
  TestField fld;
  fld.rows = rows;
  fld.cols = cols;
  for (const auto& [rc, row] : cells) {
    bool ok = !std::isnan(row.tmax) && !std::isnan(row.tmin);
    fld.tmax.push_back(row.tmax);
    fld.tmin.push_back(row.tmin);
    fld.argmax.push_back(ok ? row.argmax : -1);
    fld.valid.push_back(ok);
  }
  return fld;
}

TestField compute_field(const Cube& cube, const Dictionary& dict,
                        SimilarityKind kind, unsigned threads) {
  if (cube.bands() != dict.length())
    throw InputError("cube has " + std::to_string(cube.bands()) +
                     " bands but atoms have length " +
                     std::to_string(dict.length()));
  const std::size_t n = cube.pixels(), m = dict.size();
  TestField f;
  f.rows = cube.ny();
  f.cols = cube.nx();
  f.tmax.assign(n, std::numeric_limits<double>::quiet_NaN());
  f.tmin.assign(n, std::numeric_limits<double>::quiet_NaN());
  f.argmax.assign(n, -1);
  f.valid.assign(n, 0);

  parallel_for(n, threads, [&](std::size_t p) {
    if (cube.masked(p)) return;
    auto y = cube.spectrum(p);
    double hi = similarity(kind, y, dict.atom(0)), lo = hi;
    int best = 0;
    for (std::size_t j = 1; j < m; ++j) {
      double s = similarity(kind, y, dict.atom(j));
      if (s > hi) {
        hi = s;
        best = static_cast<int>(j);
      }
      if (s < lo) lo = s;
    }
    f.tmax[p] = hi;
    f.tmin[p] = lo;
    f.argmax[p] = best;
    f.valid[p] = 1;
  });
  return f;
}

}  // namespace hsdetect
