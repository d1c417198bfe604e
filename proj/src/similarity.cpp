#include "hsdetect/similarity.hpp"

#include <cmath>
#include <string>

#include "hsdetect/error.hpp"

namespace hsdetect {

SimilarityKind parse_similarity(std::string_view name) {
  if (name == "mf") return SimilarityKind::MatchedFilter;
  if (name == "sad") return SimilarityKind::SpectralAngle;
  throw InputError("unknown similarity '" + std::string(name) +
                   "' (expected mf or sad)");
}

std::string_view to_string(SimilarityKind kind) {
  return kind == SimilarityKind::MatchedFilter ? "mf" : "sad";
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double similarity(SimilarityKind kind, std::span<const double> y,
                  std::span<const double> d) {
  if (y.size() != d.size()) throw InputError("spectrum/atom length mismatch");
  double nd = norm2(d);
  if (nd == 0.0) throw InputError("zero atom");
  double s = dot(d, y) / nd;
  if (kind == SimilarityKind::MatchedFilter) return s;
  double ny = norm2(y);
  return ny == 0.0 ? 0.0 : s / ny;
}

}  // namespace hsdetect
