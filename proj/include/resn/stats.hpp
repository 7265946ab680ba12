#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "resn/errors.hpp"

namespace resn {

/// Mean, median, max, min and sample SD of a group of results.
struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double min = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 for a single value

  bool operator==(const Summary&) const = default;
};

/// Values are sorted first, so the result does not depend on input order.
inline Summary summarize(std::span<const double> values) {
  if (values.empty()) throw invalid_argument("summarize: empty group");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  Summary s;
  s.count = n;
  s.min = v.front();
  s.max = v.back();
  s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

namespace detail {

/// Midranks (1-based) of the pooled sample a ++ b.
inline std::vector<double> midranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(pooled.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
  std::vector<double> ranks(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Largest pooled size for which the rank-sum test enumerates exactly.
inline constexpr std::size_t kExactRankSumLimit = 12;

/// Two-sided exact p-value: the permutation distribution of a's rank sum,
/// enumerated over all C(n+m, n) assignments of ranks to the first sample.
inline double wilcoxon_exact(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw invalid_argument("wilcoxon: both samples must be nonempty");
  const std::size_t n = a.size(), total = a.size() + b.size();
  if (total > 20) throw invalid_argument("wilcoxon_exact: pooled sample too large to enumerate");
  const auto ranks = detail::midranks(a, b);
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) observed += ranks[i];

  // Midranks are multiples of 1/2, so rank sums are exact in double.
  std::size_t below = 0, above = 0, count = 0;
  for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != n) continue;
    double w = 0.0;
    for (std::size_t i = 0; i < total; ++i)
      if (mask & (1u << i)) w += ranks[i];
    ++count;
    if (w <= observed) ++below;
    if (w >= observed) ++above;
  }
  const double tail = static_cast<double>(std::min(below, above)) / static_cast<double>(count);
  return std::min(1.0, 2.0 * tail);
}

/// Two-sided normal approximation with tie and continuity corrections.
inline double wilcoxon_normal(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw invalid_argument("wilcoxon: both samples must be nonempty");
  const auto n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  const double N = n + m;
  const auto ranks = detail::midranks(a, b);
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w += ranks[i];
  const double u = w - n * (n + 1.0) / 2.0;

  std::vector<double> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double var = n * m / 12.0 * ((N + 1.0) - (N > 1.0 ? tie_term / (N * (N - 1.0)) : 0.0));
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, std::abs(u - n * m / 2.0) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::numbers::sqrt2));
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) p-value. Exact enumeration
/// when the pooled size is at most kExactRankSumLimit, the normal
/// approximation otherwise.
inline double wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw invalid_argument("wilcoxon: both samples must be nonempty");
  if (a.size() + b.size() <= kExactRankSumLimit) return wilcoxon_exact(a, b);
  return wilcoxon_normal(a, b);
}

}  // namespace resn
