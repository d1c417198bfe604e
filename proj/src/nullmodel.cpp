#include "hsdetect/nullmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "hsdetect/error.hpp"
#include "hsdetect/io.hpp"

namespace hsdetect {

std::size_t NullModel::count_at_or_below(double t) const {
  return static_cast<std::size_t>(
      std::upper_bound(pool.begin(), pool.end(), t) - pool.begin());
}

double NullModel::cdf(double t) const {
  if (pool.empty()) throw InputError("null model is not fitted");
  return static_cast<double>(count_at_or_below(t)) /
         static_cast<double>(pool.size());
}

NullModel fit_null(const TestField& field) {
  std::vector<double> tmax, neg_tmin;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (field.valid[i]) {
      tmax.push_back(field.tmax[i]);
      neg_tmin.push_back(-field.tmin[i]);
    }
  const std::size_t n = tmax.size();
  if (n < 2) throw InputError("null fit needs at least two tested pixels");

  std::vector<double> t;
  t.reserve(2 * n);
  t.insert(t.end(), tmax.begin(), tmax.end());
  t.insert(t.end(), neg_tmin.begin(), neg_tmin.end());
  std::stable_sort(t.begin(), t.end());
  if (t.front() == t.back()) throw NumericError("degenerate field");

  NullModel model;
  model.n = n;
  model.mu0_hat = (t[n - 1] + t[n]) / 2.0;
  for (double v : tmax)
    if (v <= model.mu0_hat) model.pool.push_back(v);
  model.n0 = model.pool.size();
  for (double v : neg_tmin)
    if (v > model.mu0_hat) model.pool.push_back(v);
  model.g0_size = model.pool.size() - model.n0;
  if (model.pool.empty()) throw NumericError("degenerate field");
  std::sort(model.pool.begin(), model.pool.end());
  // Equals min(2 n0 / n, 1) whenever |s0| = |g0|, which holds without ties.
  model.pi0_hat = std::min(
      static_cast<double>(model.pool.size()) / static_cast<double>(n), 1.0);
  return model;
}

double null_cdf(const NullModel& model, double t) { return model.cdf(t); }

std::vector<double> empirical_pvalues(const NullModel& model,
                                      const TestField& field) {
  if (model.pool.empty()) throw InputError("null model is not fitted");
  const std::size_t total = model.pool.size();
  std::vector<double> p(field.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!field.valid[i]) continue;
    std::size_t below = model.count_at_or_below(field.tmax[i]);
    p[i] = static_cast<double>(total - below) / static_cast<double>(total);
  }
  return p;
}

void NullModel::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "mu0_hat,pi0_hat,n0,n,g0\n"
      << format_double(mu0_hat) << ',' << format_double(pi0_hat) << ',' << n0
      << ',' << n << ',' << g0_size << "\nvalue,set\n";
  for (double v : pool)
    out << format_double(v) << ',' << (v > mu0_hat ? 1 : 0) << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

NullModel NullModel::load_csv(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.size() < 3 || trim(lines[0]) != "mu0_hat,pi0_hat,n0,n,g0" ||
      trim(lines[2]) != "value,set")
    throw InputError("not a null-model file: " + path.string());
  auto h = split(lines[1], ',');
  if (h.size() != 5) throw InputError("bad null-model header values");
  NullModel m;
  m.mu0_hat = parse_double(h[0]);
  m.pi0_hat = parse_double(h[1]);
  m.n0 = static_cast<std::size_t>(parse_int(h[2]));
  m.n = static_cast<std::size_t>(parse_int(h[3]));
  m.g0_size = static_cast<std::size_t>(parse_int(h[4]));
  std::size_t s0 = 0;
  for (std::size_t i = 3; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto f = split(lines[i], ',');
    if (f.size() != 2) throw InputError("bad null-model row");
    m.pool.push_back(parse_double(f[0]));
    s0 += parse_int(f[1]) == 0;
  }
  if (m.pool.size() != m.n0 + m.g0_size || s0 != m.n0 ||
      !std::is_sorted(m.pool.begin(), m.pool.end()) || m.pool.empty())
    throw InputError("null-model sample is inconsistent with its header");
  return m;
}

}  // namespace hsdetect
