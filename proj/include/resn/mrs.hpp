#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "resn/data.hpp"
#include "resn/detail/parallel.hpp"
#include "resn/detail/random.hpp"
#include "resn/errors.hpp"
#include "resn/rnn.hpp"
#include "resn/train.hpp"

namespace resn {

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct MRSConfig {
  std::size_t num_samples = 100;
  double threshold = 0.1;
  double weight_mean = 0.0;
  double weight_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_samples < 2) throw invalid_argument("MRSConfig: num_samples must be >= 2");
    if (!(threshold > 0.0)) throw invalid_argument("MRSConfig: threshold must be positive");
    if (!(weight_sd > 0.0)) throw invalid_argument("MRSConfig: weight_sd must be positive");
  }

  bool operator==(const MRSConfig&) const = default;
};

struct MRSResult {
  std::vector<double> maes;
  double mean_mae = 0.0;
  double sd_mae = 0.0;
  double p_t = 0.0;
};

/// Weight vector number `sample` of the seeded stream: i.i.d. normal entries.
inline WeightVector sample_weights(const Architecture& arch, const MRSConfig& cfg, std::uint64_t sample) {
  Rng rng = make_rng(cfg.seed, sample);
  std::normal_distribution<double> dist(cfg.weight_mean, cfg.weight_sd);
  WeightVector w(weight_count(arch));
  for (auto& v : w.values) v = dist(rng);
  return w;
}

/// MAE on `train` of each of cfg.num_samples random weight vectors
/// (samples numbered 1..num_samples). Results do not depend on `threads`.
inline std::vector<double> sample_maes(const Architecture& arch, const WindowedSet& train, const MRSConfig& cfg,
                                       std::size_t threads = 1) {
  cfg.validate();
  if (train.size() == 0) throw invalid_argument("sample_maes: empty training set");
  std::vector<double> maes(cfg.num_samples);
  detail::parallel_for(cfg.num_samples, threads, [&](std::size_t s) {
    const auto w = sample_weights(arch, cfg, s + 1);
    maes[s] = mae(train.targets, predict_series(arch, w, train));
  });
  return maes;
}

inline double sample_mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double sample_sd(std::span<const double> xs) {
  const double mean = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Probability that an error falls at or below `threshold` under a normal
/// fitted to `maes` and truncated to [0, inf).
inline double estimate_pt(std::span<const double> maes, double threshold) {
  if (maes.size() < 2) throw invalid_argument("estimate_pt: needs at least 2 errors");
  if (!(threshold > 0.0)) throw invalid_argument("estimate_pt: threshold must be positive");
  const double mu = sample_mean(maes);
  const double sigma = sample_sd(maes);
  if (!(sigma > 0.0)) return mu <= threshold ? 1.0 : 0.0;
  const double at_zero = normal_cdf(-mu / sigma);
  const double at_t = normal_cdf((threshold - mu) / sigma);
  const double p = (at_t - at_zero) / (1.0 - at_zero);
  return std::clamp(p, 0.0, 1.0);
}

inline MRSResult run_mrs(const Architecture& arch, const WindowedSet& train, const MRSConfig& cfg,
                         std::size_t threads = 1) {
  MRSResult r;
  r.maes = sample_maes(arch, train, cfg, threads);
  r.mean_mae = sample_mean(r.maes);
  r.sd_mae = sample_sd(r.maes);
  r.p_t = estimate_pt(r.maes, cfg.threshold);
  return r;
}

/// Training-free fitness p_t of an architecture.
inline double fitness(const Architecture& arch, const WindowedSet& train, const MRSConfig& cfg,
                      std::size_t threads = 1) {
  return estimate_pt(sample_maes(arch, train, cfg, threads), cfg.threshold);
}

/// MAE of predicting each training value by its predecessor; the default
/// MRS threshold.
inline double naive_threshold(const TimeSeriesDataset& ds) {
  if (ds.split_index < 2) throw invalid_argument("naive_threshold: training prefix too short");
  double sum = 0.0;
  for (std::size_t i = 1; i < ds.split_index; ++i) sum += std::abs(ds.normalized[i] - ds.normalized[i - 1]);
  const double t = sum / static_cast<double>(ds.split_index - 1);
  return t > 0.0 ? t : std::numeric_limits<double>::min();
}

}  // namespace resn
