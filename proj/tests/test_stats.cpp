#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "resn/stats.hpp"

TEST(Summarize, HandValues) {
  const std::vector<double> three{1, 2, 3};
  auto s = resn::summarize(three);
  EXPECT_EQ(s.count, 3u);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.median, 2.0);
  EXPECT_DOUBLE_EQ(s.sd, 1.0);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 3.0);
  const std::vector<double> four{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(resn::summarize(four).median, 2.5);
}

TEST(Summarize, SingleValue) {
  const std::vector<double> one{0.7};
  auto s = resn::summarize(one);
  EXPECT_EQ(s.mean, 0.7);
  EXPECT_EQ(s.median, 0.7);
  EXPECT_EQ(s.max, 0.7);
  EXPECT_EQ(s.min, 0.7);
  EXPECT_EQ(s.sd, 0.0);
  EXPECT_THROW(resn::summarize(std::vector<double>{}), resn::invalid_argument);
}

TEST(Summarize, OrderInvariant) {
  std::mt19937_64 rng(31);
  std::lognormal_distribution<double> d(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial);
    for (auto& x : v) x = d(rng);
    const auto base = resn::summarize(v);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(v.begin(), v.end(), rng);
      EXPECT_EQ(resn::summarize(v), base);
    }
  }
}

TEST(Wilcoxon, EnumeratedExamples) {
  const std::vector<double> a2{1, 2}, b2{3, 4}, a3{1, 2, 3}, b3{4, 5, 6};
  EXPECT_NEAR(resn::wilcoxon_rank_sum(a2, b2), 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(resn::wilcoxon_rank_sum(a3, b3), 2.0 / 20.0, 1e-12);
  EXPECT_NEAR(oracle::rank_sum_enumerated(a2, b2), 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(oracle::rank_sum_enumerated(a3, b3), 2.0 / 20.0, 1e-12);
}

TEST(Wilcoxon, IdenticalSamplesGiveOne) {
  const std::vector<double> a{0.3, 0.1, 0.2};
  EXPECT_EQ(resn::wilcoxon_rank_sum(a, a), 1.0);
  const std::vector<double> c{5, 5, 5, 5, 5, 5, 5, 5};
  EXPECT_EQ(resn::wilcoxon_rank_sum(c, c), 1.0);
}

TEST(Wilcoxon, ExactMatchesEnumerationOracle) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 6, m = 1 + (trial / 6) % 6;
    std::vector<double> a(n), b(m);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng) + 0.7;
    EXPECT_NEAR(resn::wilcoxon_exact(a, b), oracle::rank_sum_enumerated(a, b), 1e-12);
  }
}

TEST(Wilcoxon, NormalBranchAgreesWithExactOnSixPlusSix) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> d(0.0, 1.0);
  std::uniform_real_distribution<double> shift(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(6), b(6);
    const double s = shift(rng);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng) + s;
    EXPECT_LE(std::abs(resn::wilcoxon_normal(a, b) - resn::wilcoxon_exact(a, b)), 0.05);
  }
}

TEST(Wilcoxon, LargeSamplesUseApproximation) {
  std::vector<double> a(10), b(10);
  for (int i = 0; i < 10; ++i) {
    a[i] = i;
    b[i] = i + 10;
  }
  const double p = resn::wilcoxon_rank_sum(a, b);
  EXPECT_EQ(p, resn::wilcoxon_normal(a, b));
  EXPECT_LT(p, 0.001);
  EXPECT_GT(p, 0.0);
}

TEST(Wilcoxon, SymmetricAndInRange) {
  std::mt19937_64 rng(34);
  std::uniform_int_distribution<int> d(0, 5);  // many ties
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(1 + trial % 9), b(1 + trial % 13);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    const double p = resn::wilcoxon_rank_sum(a, b);
    EXPECT_GT(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_NEAR(p, resn::wilcoxon_rank_sum(b, a), 1e-12);
  }
}

TEST(Wilcoxon, EmptyInput) {
  const std::vector<double> a{1.0}, none;
  EXPECT_THROW(resn::wilcoxon_rank_sum(a, none), resn::invalid_argument);
  EXPECT_THROW(resn::wilcoxon_rank_sum(none, a), resn::invalid_argument);
}
