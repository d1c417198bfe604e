#pragma once

#include <span>
#include <string_view>

namespace hsdetect {

enum class SimilarityKind { MatchedFilter, SpectralAngle };

// Accepts "mf" and "sad".
SimilarityKind parse_similarity(std::string_view name);
std::string_view to_string(SimilarityKind kind);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// MatchedFilter: <d, y> / |d|.  SpectralAngle: <d, y> / (|d| |y|), and 0 when
/// y is the zero vector. Throws InputError on length mismatch or a zero atom.
double similarity(SimilarityKind kind, std::span<const double> y,
                  std::span<const double> d);

}  // namespace hsdetect
