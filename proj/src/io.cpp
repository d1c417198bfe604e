#include "hsdetect/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hsdetect/error.hpp"

namespace hsdetect {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (text == "nan" || text == "NaN" || text == "-nan")
    return std::numeric_limits<double>::quiet_NaN();
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() ||
      res.ptr != text.data() + text.size())
    throw InputError("not a number: '" + std::string(text) + "'");
  return v;
}

long long parse_int(std::string_view text) {
  text = trim(text);
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() ||
      res.ptr != text.data() + text.size())
    throw InputError("not an integer: '" + std::string(text) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view text) {
  const char* ws = " \t\r\n";
  std::size_t a = text.find_first_not_of(ws);
  if (a == std::string_view::npos) return {};
  std::size_t b = text.find_last_not_of(ws);
  return text.substr(a, b - a + 1);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_grid_csv(const std::filesystem::path& path, std::size_t rows,
                    std::size_t cols, std::span<const double> values) {
  if (values.size() != rows * cols) throw InputError("grid shape mismatch");
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << format_double(values[r * cols + c]);
    }
    out << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

std::vector<double> read_grid_csv(const std::filesystem::path& path,
                                  std::size_t& rows, std::size_t& cols) {
  std::vector<double> values;
  rows = 0;
  cols = 0;
  for (const auto& line : read_lines(path)) {
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (rows == 0)
      cols = fields.size();
    else if (fields.size() != cols)
      throw InputError("ragged grid in " + path.string());
    for (auto f : fields) values.push_back(parse_double(f));
    ++rows;
  }
  if (rows == 0) throw InputError("empty grid: " + path.string());
  return values;
}

void write_pgm(const std::filesystem::path& path, std::size_t rows,
               std::size_t cols, std::span<const double> values, double lo,
               double hi) {
  if (values.size() != rows * cols) throw InputError("image shape mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  double span = hi - lo;
  for (double v : values) {
    double u = std::isnan(v) || span == 0.0 ? 0.0 : (v - lo) / span;
    u = std::clamp(u, 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(u * 255.0))));
  }
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::size_t lineno = 0;
  for (auto raw : split(text, '\n')) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InputError("config line " + std::to_string(lineno) +
                       ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty())
      throw InputError("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key)) throw InputError("duplicate config key " + key);
    cfg.values_[key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const {
  return values_.count(key) != 0;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

std::string KeyValueConfig::get(const std::string& key,
                                const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_[key] = true;
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key,
                                  double fallback) const {
  return has(key) ? parse_double(get(key, "")) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key,
                                  long long fallback) const {
  return has(key) ? parse_int(get(key, "")) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get(key, "");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("not a boolean for " + key + ": " + v);
}

std::vector<double> KeyValueConfig::get_doubles(
    const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (auto f : split(get(key, ""), ','))
    if (!trim(f).empty()) out.push_back(parse_double(f));
  return out;
}

std::vector<std::string> KeyValueConfig::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

}  // namespace hsdetect
