#include "hsdetect/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hsdetect/error.hpp"
#include "hsdetect/io.hpp"
#include "hsdetect/similarity.hpp"

namespace hsdetect {

namespace {

// Returns false when the vector is identically zero.
bool normalize(std::vector<double>& v) {
  double n = norm2(v);
  if (n == 0.0) return false;
  for (double& x : v) x /= n;
  return true;
}

}  // namespace

ReferenceAtom::ReferenceAtom(std::vector<double> values, int center_band,
                             Profile profile)
    : values_(std::move(values)),
      center_band_(center_band),
      profile_(std::move(profile)) {
  if (values_.size() < 2) throw InputError("reference needs at least 2 bands");
  for (double v : values_)
    if (!std::isfinite(v)) throw InputError("reference has non-finite values");
  if (!normalize(values_)) throw InputError("reference is identically zero");
}

ReferenceAtom ReferenceAtom::from_profile(Profile profile, std::size_t length,
                                          int center_band) {
  if (!profile) throw InputError("empty profile");
  std::vector<double> v(length);
  for (std::size_t j = 0; j < length; ++j)
    v[j] = profile(static_cast<double>(j) - center_band);
  return ReferenceAtom(std::move(v), center_band, std::move(profile));
}

bool ReferenceAtom::non_negative() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return v >= 0.0; });
}

std::vector<double> ReferenceAtom::shifted(double shift, ShiftMode mode) const {
  const std::size_t l = values_.size();
  std::vector<double> out(l, 0.0);
  if (mode == ShiftMode::IntegerBand) {
    long s = std::lround(shift);
    for (std::size_t j = 0; j < l; ++j) {
      long src = static_cast<long>(j) - s;
      if (src >= 0 && src < static_cast<long>(l))
        out[j] = values_[static_cast<std::size_t>(src)];
    }
    return out;
  }
  if (!profile_)
    throw InputError("continuous shifts need an analytic reference profile");
  for (std::size_t j = 0; j < l; ++j)
    out[j] = profile_(static_cast<double>(j) - center_band_ - shift);
  return out;
}

ReferenceAtom gaussian_reference(std::size_t length, int center_band,
                                 double fwhm, double truncation) {
  if (!(fwhm > 0.0)) throw InputError("fwhm must be positive");
  const double s = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  Profile f = [s, truncation](double x) {
    return std::abs(x) <= truncation ? std::exp(-x * x / (2.0 * s * s)) : 0.0;
  };
  return ReferenceAtom::from_profile(std::move(f), length, center_band);
}

Dictionary::Dictionary(std::vector<std::vector<double>> atoms,
                       std::vector<double> shifts,
                       std::optional<LssRecipe> recipe)
    : m_(atoms.size()), shifts_(std::move(shifts)), recipe_(std::move(recipe)) {
  if (m_ == 0) throw InputError("dictionary needs at least one atom");
  if (shifts_.size() != m_) throw InputError("one shift per atom required");
  l_ = atoms[0].size();
  if (l_ == 0) throw InputError("atoms must be non-empty");
  atoms_.reserve(m_ * l_);
  for (const auto& a : atoms) {
    if (a.size() != l_) throw InputError("atoms differ in length");
    for (double v : a)
      if (!std::isfinite(v)) throw InputError("atom has non-finite values");
    if (std::abs(norm2(a) - 1.0) > 1e-12)
      throw InputError("atoms must have unit norm");
    atoms_.insert(atoms_.end(), a.begin(), a.end());
  }
  for (double s : shifts_) tau_ = std::max(tau_, std::abs(s));
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t j = i + 1; j < m_; ++j)
      coherence_ = std::max(coherence_, std::abs(inner(i, j)));
}

double Dictionary::inner(std::size_t i, std::size_t j) const {
  return dot(atom(i), atom(j));
}

void Dictionary::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t k = 0; k < m_; ++k)
    out << (k ? "," : "") << format_double(shifts_[k]);
  out << '\n';
  for (std::size_t k = 0; k < m_; ++k) {
    auto a = atom(k);
    for (std::size_t j = 0; j < l_; ++j)
      out << (j ? "," : "") << format_double(a[j]);
    out << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

Dictionary Dictionary::load_csv(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.size() < 2) throw InputError("dictionary file too short");
  std::vector<double> shifts;
  for (auto f : split(lines[0], ',')) shifts.push_back(parse_double(f));
  if (lines.size() - 1 != shifts.size())
    throw InputError("dictionary: shift count does not match atom rows");
  std::vector<std::vector<double>> atoms;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    std::vector<double> a;
    for (auto f : split(lines[k], ',')) a.push_back(parse_double(f));
    atoms.push_back(std::move(a));
  }
  return Dictionary(std::move(atoms), std::move(shifts));
}

std::vector<double> lss_shifts(std::size_t m, double tau) {
  if (m == 0) throw InputError("m must be at least 1");
  if (m == 1) return {0.0};
  std::vector<double> s(m);
  for (std::size_t k = 0; k < m; ++k)
    s[k] = -tau + 2.0 * tau * static_cast<double>(k) / static_cast<double>(m - 1);
  return s;
}

Dictionary build_lss(const ReferenceAtom& reference, std::size_t m, double tau,
                     ShiftMode mode) {
  if (m == 0) throw InputError("m must be at least 1");
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw InputError("tau must be finite and non-negative");
  if (m == 1 && tau > 0.0)
    throw InputError("a single atom cannot span a non-zero shift range");
  auto shifts = lss_shifts(m, tau);
  std::vector<std::vector<double>> atoms;
  atoms.reserve(m);
  for (double s : shifts) {
    auto a = reference.shifted(s, mode);
    if (!normalize(a))
      throw InputError("atom vanished at shift " + format_double(s));
    atoms.push_back(std::move(a));
  }
  if (!reference.non_negative())
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (dot(atoms[i], atoms[j]) < 0.0)
          throw InputError(
              "signed reference yields negatively correlated atoms");
  return Dictionary(std::move(atoms), std::move(shifts),
                    LssRecipe{reference, mode});
}

double autocorrelation(const ReferenceAtom& reference, double shift,
                       ShiftMode mode) {
  auto a = reference.shifted(shift, mode);
  if (!normalize(a)) return 0.0;
  return dot(reference.values(), a);
}

double expected_max_gain(const ReferenceAtom& reference, std::size_t m,
                         double tau, double amplitude, ShiftMode mode) {
  if (m < 2) throw InputError("expected gain needs m >= 2");
  if (amplitude == 0.0) return 0.0;
  const double w = tau / static_cast<double>(m - 1);
  if (w == 0.0) return amplitude * autocorrelation(reference, 0.0, mode);

  if (mode == ShiftMode::IntegerBand) {
    // Gamma(round(e)) is constant on [k - 1/2, k + 1/2).
    double acc = 0.0;
    for (long k = 0; static_cast<double>(k) - 0.5 < w; ++k) {
      double lo = std::max(0.0, k - 0.5), hi = std::min(w, k + 0.5);
      if (hi > lo) acc += (hi - lo) * autocorrelation(reference, double(k), mode);
    }
    return amplitude * acc / w;
  }

  // Truncation makes Gamma kinked at the support edges; split the range at
  // integer offsets so each panel is smooth.
  auto g = [&](double e) { return autocorrelation(reference, e, mode); };
  double acc = 0.0, lo = 0.0;
  while (lo < w) {
    double hi = std::min(w, std::floor(lo) + 1.0);
    acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        g, lo, hi, 10, 1e-13);
    lo = hi;
  }
  return amplitude * acc / w;
}

}  // namespace hsdetect
