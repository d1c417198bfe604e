#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hsdetect {

enum class ShiftMode {
  IntegerBand,  // index roll; non-integer shifts are rounded to nearest band
  Continuous,   // resample the analytic profile at x - shift
};

// Line profile as a function of the band offset from the atom centre.
using Profile = std::function<double(double)>;

/// Unit-norm target signature.
class ReferenceAtom {
 public:
  /// Values are normalized on construction. Throws InputError when l < 2,
  /// any value is non-finite, or the norm is zero.
  ReferenceAtom(std::vector<double> values, int center_band,
                Profile profile = {});

  /// Samples profile(j - center_band) for j in [0, length).
  static ReferenceAtom from_profile(Profile profile, std::size_t length,
                                    int center_band);

  const std::vector<double>& values() const { return values_; }
  std::size_t length() const { return values_.size(); }
  int center_band() const { return center_band_; }
  bool has_profile() const { return static_cast<bool>(profile_); }
  bool non_negative() const;

  /// Shifted copy, truncated to [0, l) but not renormalized. In continuous
  /// mode the profile is required (InputError otherwise).
  std::vector<double> shifted(double shift, ShiftMode mode) const;

 private:
  std::vector<double> values_;
  int center_band_;
  Profile profile_;
};

/// Truncated Gaussian line: exp(-x^2 / 2s^2) for |x| <= truncation, 0 beyond,
/// with s derived from the FWHM.
ReferenceAtom gaussian_reference(std::size_t length = 30, int center_band = 14,
                                 double fwhm = 5.0, double truncation = 6.0);

struct LssRecipe {
  ReferenceAtom reference;
  ShiftMode mode;
};

/// m unit-norm atoms of a common length, with their shifts.
class Dictionary {
 public:
  /// Atoms must share one length and have unit norm within 1e-12.
  Dictionary(std::vector<std::vector<double>> atoms, std::vector<double> shifts,
             std::optional<LssRecipe> recipe = std::nullopt);

  std::size_t size() const { return m_; }
  std::size_t length() const { return l_; }
  std::span<const double> atom(std::size_t k) const {
    return {atoms_.data() + k * l_, l_};
  }
  const std::vector<double>& shifts() const { return shifts_; }
  double tau() const { return tau_; }
  // max_{i != j} |<d_i, d_j>|, 0 for a single atom.
  double coherence() const { return coherence_; }
  double inner(std::size_t i, std::size_t j) const;
  const std::optional<LssRecipe>& recipe() const { return recipe_; }

  void save_csv(const std::filesystem::path& path) const;
  static Dictionary load_csv(const std::filesystem::path& path);

 private:
  std::size_t m_ = 0, l_ = 0;
  std::vector<double> atoms_;
  std::vector<double> shifts_;
  double tau_ = 0.0;
  double coherence_ = 0.0;
  std::optional<LssRecipe> recipe_;
};

/// Shift grid tau_k = -tau + 2 tau k / (m - 1); {0} for m = 1.
std::vector<double> lss_shifts(std::size_t m, double tau);

/// Atoms d*^{tau_k}, each truncated and renormalized. Throws InputError for
/// m = 0, tau < 0, m = 1 with tau > 0, a vanished atom, or a signed reference
/// whose atoms are not pairwise non-negatively correlated.
Dictionary build_lss(const ReferenceAtom& reference, std::size_t m, double tau,
                     ShiftMode mode);

/// Gamma(u) = <d*, d*^u> with d*^u renormalized; 0 if the shift vanishes.
double autocorrelation(const ReferenceAtom& reference, double shift,
                       ShiftMode mode = ShiftMode::Continuous);

/// a * E[Gamma(e)], e ~ U[0, tau / (m - 1)]. Integrated adaptively in
/// continuous mode and exactly (piecewise constant) in integer mode.
double expected_max_gain(const ReferenceAtom& reference, std::size_t m,
                         double tau, double amplitude,
                         ShiftMode mode = ShiftMode::Continuous);

}  // namespace hsdetect
