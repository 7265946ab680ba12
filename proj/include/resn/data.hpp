#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "resn/errors.hpp"

namespace resn {

inline constexpr double kDefaultTrainFraction = 0.8;

/// A univariate series with min-max scaling fitted on its training prefix.
///
/// `normalized[i] = (raw[i] - norm_min) / (norm_max - norm_min)`; the
/// constants come from raw[0, split_index) only, so test values may fall
/// outside [0, 1]. A constant training prefix maps every value to 0.
struct TimeSeriesDataset {
  std::vector<double> raw;
  std::vector<double> normalized;
  double norm_min = 0.0;
  double norm_max = 0.0;
  std::size_t split_index = 0;

  std::size_t size() const noexcept { return raw.size(); }

  double normalize(double value) const noexcept {
    return norm_max > norm_min ? (value - norm_min) / (norm_max - norm_min) : 0.0;
  }
  double denormalize(double value) const noexcept {
    return norm_max > norm_min ? value * (norm_max - norm_min) + norm_min : norm_min;
  }

  bool operator==(const TimeSeriesDataset&) const = default;
};

/// Builds a dataset from raw values: chooses the split and fits the scaling.
inline TimeSeriesDataset make_dataset(std::vector<double> raw,
                                      double train_fraction = kDefaultTrainFraction) {
  if (raw.size() < 2) throw invalid_argument("a series needs at least 2 points");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw invalid_argument("train_fraction must lie in (0, 1)");
  for (double v : raw)
    if (!std::isfinite(v)) throw invalid_argument("series contains a non-finite value");

  TimeSeriesDataset ds;
  ds.raw = std::move(raw);
  const auto n = ds.raw.size();
  auto split = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  ds.split_index = std::clamp<std::size_t>(split, 1, n - 1);

  auto [lo, hi] = std::minmax_element(ds.raw.begin(), ds.raw.begin() + static_cast<std::ptrdiff_t>(ds.split_index));
  ds.norm_min = *lo;
  ds.norm_max = *hi;
  ds.normalized.resize(n);
  std::transform(ds.raw.begin(), ds.raw.end(), ds.normalized.begin(),
                 [&](double v) { return ds.normalize(v); });
  return ds;
}

struct SineParams {
  std::size_t num_points = 500;
  double period = 50.0;
  double amplitude = 1.0;
  double phase = 0.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  double train_fraction = kDefaultTrainFraction;

  bool operator==(const SineParams&) const = default;
};

/// raw[i] = amplitude * sin(2*pi*i/period + phase) + N(0, noise_sd^2).
inline TimeSeriesDataset generate_sine(const SineParams& p) {
  if (p.num_points < 2) throw invalid_argument("generate_sine: num_points must be >= 2");
  if (!(p.period > 0.0)) throw invalid_argument("generate_sine: period must be positive");
  if (!(p.amplitude > 0.0)) throw invalid_argument("generate_sine: amplitude must be positive");
  if (!(p.noise_sd >= 0.0)) throw invalid_argument("generate_sine: noise_sd must be nonnegative");

  std::vector<double> raw(p.num_points);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> noise(0.0, p.noise_sd > 0.0 ? p.noise_sd : 1.0);
  for (std::size_t i = 0; i < p.num_points; ++i) {
    raw[i] = p.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / p.period + p.phase);
    if (p.noise_sd > 0.0) raw[i] += noise(rng);
  }
  return make_dataset(std::move(raw), p.train_fraction);
}

/// Column selector for load_csv: a header name or a 0-based index.
using CsvColumn = std::variant<std::string, std::size_t>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace detail

/// Reads one numeric column of a delimited text file with a header row.
/// The delimiter (',' or ';') is detected from the header line. Rows in
/// error messages are 1-based data rows, header excluded.
inline TimeSeriesDataset load_csv(const std::string& path, const CsvColumn& column,
                                  double train_fraction = kDefaultTrainFraction) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open CSV file '" + path + "'");

  std::string header;
  if (!std::getline(in, header)) throw invalid_data("CSV file '" + path + "' is empty");
  if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
  const auto commas = std::count(header.begin(), header.end(), ',');
  const auto semis = std::count(header.begin(), header.end(), ';');
  const char delim = semis > commas ? ';' : ',';

  const auto names = detail::split_fields(header, delim);
  std::size_t col = 0;
  if (const auto* name = std::get_if<std::string>(&column)) {
    auto it = std::find(names.begin(), names.end(), std::string_view(*name));
    if (it == names.end()) throw invalid_argument("CSV column '" + *name + "' not found in header");
    col = static_cast<std::size_t>(it - names.begin());
  } else {
    col = std::get<std::size_t>(column);
    if (col >= names.size())
      throw invalid_argument("CSV column index " + std::to_string(col) + " out of range (header has " +
                             std::to_string(names.size()) + " columns)");
  }

  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split_fields(line, delim);
    if (col >= fields.size()) throw parse_error("CSV row has too few fields", row);
    double value = 0.0;
    if (!detail::parse_double(fields[col], value))
      throw parse_error("cannot parse '" + std::string(fields[col]) + "' as a number", row);
    values.push_back(value);
  }
  if (values.size() < 2)
    throw invalid_data("CSV file '" + path + "' has fewer than 2 data rows");
  return make_dataset(std::move(values), train_fraction);
}

enum class Segment { train, test, whole };

/// Supervised pairs cut from a series: input k is the `look_back` values
/// preceding target k. Inputs are stored contiguously, window after window.
struct WindowedSet {
  std::vector<double> input_values;
  std::vector<double> targets;
  std::size_t look_back = 0;

  std::size_t size() const noexcept { return targets.size(); }
  std::span<const double> input(std::size_t k) const {
    return {input_values.data() + k * look_back, look_back};
  }

  bool operator==(const WindowedSet&) const = default;
};

/// Windows a plain sequence. Requires look_back < values.size().
inline WindowedSet window_values(std::span<const double> values, std::size_t look_back) {
  if (look_back == 0) throw invalid_argument("window: look_back must be positive");
  if (look_back >= values.size())
    throw invalid_argument("window: look_back " + std::to_string(look_back) +
                           " must be smaller than the segment length " + std::to_string(values.size()));
  WindowedSet out;
  out.look_back = look_back;
  const std::size_t pairs = values.size() - look_back;
  out.input_values.reserve(pairs * look_back);
  out.targets.reserve(pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    out.input_values.insert(out.input_values.end(), values.begin() + static_cast<std::ptrdiff_t>(k),
                            values.begin() + static_cast<std::ptrdiff_t>(k + look_back));
    out.targets.push_back(values[k + look_back]);
  }
  return out;
}

/// Train pairs come from normalized[0, split_index). Test pairs reach back
/// `look_back` values before the split so the first test target is
/// normalized[split_index].
inline WindowedSet window(const TimeSeriesDataset& ds, std::size_t look_back, Segment segment) {
  std::span<const double> all(ds.normalized);
  switch (segment) {
    case Segment::train:
      return window_values(all.first(ds.split_index), look_back);
    case Segment::test: {
      const std::size_t test_len = ds.size() - ds.split_index;
      if (look_back == 0) throw invalid_argument("window: look_back must be positive");
      if (look_back >= test_len || look_back > ds.split_index)
        throw invalid_argument("window: look_back " + std::to_string(look_back) +
                               " must be smaller than the test segment length " + std::to_string(test_len));
      return window_values(all.subspan(ds.split_index - look_back, look_back + test_len), look_back);
    }
    case Segment::whole:
      return window_values(all, look_back);
  }
  throw invalid_argument("window: unknown segment");
}

}  // namespace resn
