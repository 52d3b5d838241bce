#include <gtest/gtest.h>

#include <cstdlib>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "aperm/bounds.hpp"
#include "aperm/errors.hpp"
#include "aperm/mc_oracle.hpp"
#include "aperm/rng.hpp"
#include "support/oracles.hpp"

using namespace aperm;

TEST(Rng, DerivedSeedsDifferAcrossStreamsAndIndices) {
  std::set<std::uint64_t> seen;
  for (auto s : {Stream::monte_carlo, Stream::calibration, Stream::data, Stream::partition}) {
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(42, s, i));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_EQ(derive_seed(1, Stream::data, 5), derive_seed(1, Stream::data, 5));
  EXPECT_NE(derive_seed(1, Stream::data, 5), derive_seed(2, Stream::data, 5));
}

TEST(Rng, DefaultSeedHonoursEnvironment) {
  ::unsetenv("APERM_SEED");
  EXPECT_EQ(default_seed(), 20200101u);
  ::setenv("APERM_SEED", "77", 1);
  EXPECT_EQ(default_seed(), 77u);
  ::setenv("APERM_SEED", "seven", 1);
  EXPECT_THROW((void)default_seed(), ParseError);
  ::unsetenv("APERM_SEED");
}

TEST(SignVector, ZeroSumAndErrors) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto s = sample_sign_vector(2 * (1 + i % 9), rng);
    ASSERT_TRUE(is_zero_sum(s));
  }
  EXPECT_THROW((void)sample_sign_vector(3, rng), DomainError);
  EXPECT_THROW((void)sample_sign_vector(0, rng), DomainError);
}

TEST(SignVector, TwoPositionsFair) {
  std::mt19937_64 rng(2);
  int plus_first = 0;
  for (int i = 0; i < 10000; ++i) plus_first += sample_sign_vector(2, rng)[0] == 1;
  EXPECT_NEAR(plus_first / 10000.0, 0.5, 0.02);
}

TEST(SignVector, FourPositionsUniform) {
  std::mt19937_64 rng(3);
  std::map<std::vector<Sign>, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[sample_sign_vector(4, rng)];
  ASSERT_EQ(counts.size(), 6u);
  double chi2 = 0.0;
  const double expected = draws / 6.0;
  for (const auto& [k, c] : counts) {
    EXPECT_NEAR(c / static_cast<double>(draws), 1.0 / 6.0, 0.02);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  // 99.9% point of chi-square with 5 degrees of freedom.
  EXPECT_LT(chi2, 20.515);
}

TEST(Stratified, KeepsStratumCounts) {
  std::mt19937_64 rng(4);
  const std::vector<Stratum> strata{{4, 2}, {6, 3}, {2, 1}};
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_stratified(strata, rng);
    ASSERT_EQ(s.size(), 12u);
    EXPECT_TRUE(is_zero_sum(std::span<const Sign>(s).subspan(0, 4)));
    EXPECT_TRUE(is_zero_sum(std::span<const Sign>(s).subspan(4, 6)));
    EXPECT_TRUE(is_zero_sum(std::span<const Sign>(s).subspan(10, 2)));
  }
}

TEST(McEstimateTest, AddOneConvention) {
  const auto e = McEstimate::from_counts(9, 99);
  EXPECT_DOUBLE_EQ(e.p_hat, 0.1);
  EXPECT_DOUBLE_EQ(e.std_err, std::sqrt(0.1 * 0.9 / 99.0));
}

TEST(McPValue, Extremes) {
  const StatisticFn zero = [](std::span<const Sign>) { return 0.0; };
  EXPECT_DOUBLE_EQ(mc_pvalue(zero, 0.0, 8, 4, 200, 1).p_hat, 1.0);
  const StatisticFn one = [](std::span<const Sign>) { return 1.0; };
  EXPECT_DOUBLE_EQ(mc_pvalue(one, 2.0, 8, 4, 200, 1).p_hat, 1.0 / 201.0);
  EXPECT_THROW((void)mc_pvalue(one, 0.0, 8, 4, 0, 1), DomainError);
}

TEST(McPValue, ReproducibleAcrossThreadCounts) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  std::vector<double> v(20);
  for (auto& x : v) x = z(rng);
  const UnivariateStatistic stat(v);
  const StatisticFn fn = [&stat](std::span<const Sign> s) { return stat.evaluate(s); };
  const double obs = stat.evaluate(canonical_signs(10, 10));
  const auto a = mc_pvalue(fn, obs, 20, 10, 2000, 99, 1);
  const auto b = mc_pvalue(fn, obs, 20, 10, 2000, 99, 4);
  const auto c = mc_pvalue(fn, obs, 20, 10, 2000, 99, 1);
  EXPECT_EQ(a.exceed_count, b.exceed_count);
  EXPECT_EQ(a.exceed_count, c.exceed_count);
  EXPECT_NE(a.exceed_count, mc_pvalue(fn, obs, 20, 10, 2000, 100, 1).exceed_count);
  EXPECT_GE(a.p_hat, 1.0 / 2001.0);
  EXPECT_LE(a.p_hat, 1.0);
}

TEST(Exhaustive, HandExample) {
  const std::vector<double> v{0.0, 0.0, 1.0, 1.0};
  const UnivariateStatistic stat(v);
  const StatisticFn fn = [&stat](std::span<const Sign> s) { return stat.evaluate(s); };
  EXPECT_NEAR(exhaustive_pvalue(fn, stat.evaluate(canonical_signs(2, 2)), 4, 2), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(exhaustive_pvalue(fn, 0.0, 4, 2), 1.0);
}

TEST(Exhaustive, GuardRail) {
  const StatisticFn fn = [](std::span<const Sign>) { return 0.0; };
  EXPECT_THROW((void)exhaustive_pvalue(fn, 0.0, 16, 8), SizeError);
  EXPECT_NO_THROW((void)exhaustive_pvalue(fn, 0.0, 14, 4));
}

TEST(Exhaustive, MatchesBruteForceOracle) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 6 + 2 * (trial % 4);
    const std::size_t m1 = trial % 2 == 0 ? n / 2 : n / 2 + 1;
    std::vector<double> v(n);
    for (auto& x : v) x = z(rng) + (&x - v.data() < static_cast<long>(m1) ? 0.7 : 0.0);
    const UnivariateStatistic stat(v);
    const StatisticFn fn = [&stat](std::span<const Sign> s) { return stat.evaluate(s); };
    const double obs = stat.evaluate(canonical_signs(m1, n - m1));
    EXPECT_NEAR(exhaustive_pvalue(fn, obs, n, m1), oracle::brute_force_pvalue(v, m1), 1e-15);
  }
}

TEST(McPValue, AgreesWithExhaustiveAtLargeN) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  std::vector<double> v(8);
  for (auto& x : v) x = z(rng);
  v[0] += 1.0;
  v[1] += 1.0;
  const UnivariateStatistic stat(v);
  const StatisticFn fn = [&stat](std::span<const Sign> s) { return stat.evaluate(s); };
  const double obs = stat.evaluate(canonical_signs(4, 4));
  const double exact = exhaustive_pvalue(fn, obs, 8, 4);
  const auto mc = mc_pvalue(fn, obs, 8, 4, 100000, 12);
  EXPECT_LE(std::abs(mc.p_hat - exact), 3.0 * mc.std_err);
}

TEST(MomentCheck, SecondMomentOfSignedSum) {
  // E|sum eps_i x_i|^2 <= 2 (n-1) s_n^2 for zero-sum signs.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  std::exponential_distribution<double> ex(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + 2 * trial;
    std::vector<double> x(n);
    for (auto& v : x) v = trial % 2 == 0 ? z(rng) : ex(rng);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sn2 = ss / static_cast<double>(n - 1);
    const int draws = 20000;
    double m1 = 0.0;
    double m2 = 0.0;
    for (int d = 0; d < draws; ++d) {
      const auto eps = sample_sign_vector(n, rng);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += eps[i] * x[i];
      m1 += s * s;
      m2 += s * s * s * s;
    }
    m1 /= draws;
    const double se = std::sqrt((m2 / draws - m1 * m1) / draws);
    EXPECT_LE(m1, 2.0 * static_cast<double>(n - 1) * sn2 + 3.0 * se) << "n=" << n;
  }
}

TEST(McSync, ZeroMatrixAndTwoSampleReduction) {
  EXPECT_DOUBLE_EQ(mc_sync_pvalue(Eigen::MatrixXd::Zero(6, 3), 100, 1).p_hat, 1.0);

  std::mt19937_64 rng(10);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> samples(2, std::vector<double>(10));
  for (auto& s : samples) {
    for (auto& v : s) v = z(rng);
  }
  for (auto& v : samples[1]) v += 0.8;
  const auto x = build_sync_matrix(samples);
  std::vector<double> pooled(samples[0]);
  pooled.insert(pooled.end(), samples[1].begin(), samples[1].end());
  const UnivariateStatistic stat(pooled);
  const StatisticFn fn = [&stat](std::span<const Sign> s) { return stat.evaluate(s); };
  const auto sync = mc_sync_pvalue(x, 3000, 55);
  const auto two = mc_pvalue(fn, stat.evaluate(canonical_signs(10, 10)), 20, 10, 3000, 55);
  EXPECT_EQ(sync.exceed_count, two.exceed_count);
}

TEST(McSync, PowerIncreasesWithShift) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  std::vector<double> mean_p;
  for (double shift : {0.0, 0.5, 1.0, 2.0}) {
    double acc = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<std::vector<double>> samples(4, std::vector<double>(20));
      for (auto& s : samples) {
        for (auto& v : s) v = z(rng);
      }
      for (auto& v : samples[3]) v += shift;
      acc += mc_sync_pvalue(build_sync_matrix(samples), 200, rep).p_hat;
    }
    mean_p.push_back(acc / 100.0);
  }
  for (std::size_t i = 1; i < mean_p.size(); ++i) EXPECT_LT(mean_p[i], mean_p[i - 1]);
}
