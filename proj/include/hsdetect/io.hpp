#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hsdetect {

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
// Throws InputError on anything that is not a complete number.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// Reads all lines, dropping a trailing '\r' from each.
std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_grid_csv(const std::filesystem::path& path, std::size_t rows,
                    std::size_t cols, std::span<const double> values);
std::vector<double> read_grid_csv(const std::filesystem::path& path,
                                  std::size_t& rows, std::size_t& cols);

/// Binary 8-bit PGM. Values are mapped linearly from [lo, hi] onto [0, 255]
/// and clamped; NaN maps to 0.
void write_pgm(const std::filesystem::path& path, std::size_t rows,
               std::size_t cols, std::span<const double> values, double lo,
               double hi);

/// Flat "key = value" file. Blank lines and lines starting with '#' are
/// ignored. Duplicate keys are an error.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig load(const std::filesystem::path& path);
  static KeyValueConfig parse(std::string_view text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  // Keys that were never read; lets callers reject typos.
  std::vector<std::string> unused() const;
  void set(const std::string& key, const std::string& value);

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

}  // namespace hsdetect
