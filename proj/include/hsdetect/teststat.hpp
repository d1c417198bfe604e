#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hsdetect/cube.hpp"
#include "hsdetect/dictionary.hpp"
#include "hsdetect/similarity.hpp"

namespace hsdetect {

/// Per-pixel max and min similarity over a dictionary. Masked pixels carry
/// NaN statistics, argmax -1 and valid = 0.
struct TestField {
  std::size_t rows = 0, cols = 0;
  std::vector<double> tmax, tmin;
  std::vector<int> argmax;
  std::vector<std::uint8_t> valid;

  std::size_t size() const { return tmax.size(); }
  std::size_t tested() const;

  static TestField from_values(std::size_t rows, std::size_t cols,
                               std::vector<double> tmax,
                               std::vector<double> tmin);
  TestField window(std::size_t y0, std::size_t x0, std::size_t h,
                   std::size_t w) const;

  // Columns: row,col,tmax,tmin,argmax.
  void save_csv(const std::filesystem::path& path) const;
  static TestField load_csv(const std::filesystem::path& path);
};

/// Ties in argmax go to the lowest atom index.
TestField compute_field(const Cube& cube, const Dictionary& dict,
                        SimilarityKind kind, unsigned threads = 1);

}  // namespace hsdetect
