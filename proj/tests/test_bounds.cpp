#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "aperm/bounds.hpp"
#include "aperm/errors.hpp"
#include "aperm/ingest.hpp"
#include "support/oracles.hpp"

using namespace aperm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<double> normals(std::size_t n, std::mt19937_64& rng, double shift = 0.0) {
  std::normal_distribution<double> z(shift, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

}  // namespace

TEST(SampleSplitTest, KappaIsExact) {
  EXPECT_EQ(SampleSplit(8, 8).ceil_kappa_plus_one(), 2u);
  EXPECT_EQ(SampleSplit(8, 4).ceil_kappa_plus_one(), 3u);
  EXPECT_EQ(SampleSplit(4, 8).ceil_kappa_plus_one(), 3u);
  EXPECT_EQ(SampleSplit(140, 60).ceil_kappa_plus_one(), 4u);  // kappa = 7/3
  EXPECT_EQ(SampleSplit(99, 33).ceil_kappa_plus_one(), 4u);   // kappa = 3 exactly
  EXPECT_DOUBLE_EQ(SampleSplit(140, 60).kappa(), 140.0 / 60.0);
  EXPECT_THROW(SampleSplit(0, 3), DomainError);
}

TEST(BoundConfigTest, Validation) {
  BoundConfig cfg;
  EXPECT_EQ(cfg.c_commutative, 64.0);
  EXPECT_EQ(cfg.c_noncommutative, 64.0);
  EXPECT_EQ(cfg.c_sync, 64.0);
  EXPECT_TRUE(cfg.calibrate);
  cfg.c_sync = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Univariate, Examples) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto st = univariate_statistic(v, SampleSplit(2, 2));
  EXPECT_NEAR(st.value, 2.0 / std::sqrt(5.0 / 3.0), 1e-14);
  EXPECT_NEAR(st.scale, std::sqrt(5.0 / 3.0), 1e-14);
  EXPECT_EQ(st.kind, StatisticKind::univariate);

  const std::vector<double> flat{3, 3, 3, 3};
  EXPECT_THROW((void)univariate_statistic(flat, SampleSplit(2, 2)), DegenerateDataError);

  const std::vector<double> equal_means{1, 3, 2, 2};
  EXPECT_NEAR(univariate_statistic(equal_means, SampleSplit(2, 2)).value, 0.0, 1e-15);
}

TEST(Univariate, BoundExamples) {
  const SampleSplit s(8, 8);
  EXPECT_EQ(univariate_tail_bound({0.0, 1.0, StatisticKind::univariate}, s), 1.0);
  EXPECT_NEAR(univariate_tail_bound({1.0, 1.0, StatisticKind::univariate}, s), std::exp(-1.0), 1e-15);
  EXPECT_THROW((void)univariate_tail_bound({1.0, 1.0, StatisticKind::banach_sum}, s), DomainError);
}

TEST(Univariate, BoundDominatesExactPValue) {
  std::mt19937_64 rng(1);
  const std::vector<double> v = normals(8, rng, 0.0);
  const auto st = univariate_statistic(v, SampleSplit(4, 4));
  EXPECT_GE(univariate_tail_bound(st, SampleSplit(4, 4)), oracle::brute_force_pvalue(v, 4));
}

TEST(Univariate, BoundMonotone) {
  for (std::size_t m2 : {4u, 8u, 13u}) {
    const SampleSplit s(8, m2);
    double prev = 1.0;
    for (double t = 0.0; t < 5.0; t += 0.05) {
      const double b = univariate_tail_bound({t, 1.0, StatisticKind::univariate}, s);
      EXPECT_GT(b, 0.0);
      EXPECT_LE(b, prev);
      prev = b;
    }
  }
}

TEST(Banach, VectorExample) {
  std::vector<VectorXd> items{Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0),
                              Eigen::Vector2d(-1, 0)};
  const auto labels = canonical_signs(2, 2);
  const auto st = banach_statistic(items, labels, NormSpec(NormSpec::Space::sequence, 2.0));
  EXPECT_NEAR(st.value, 4.0, 1e-14);
  EXPECT_EQ(st.kind, StatisticKind::banach_sum);
}

TEST(Banach, IdenticalGroupSumsGiveZero) {
  std::vector<VectorXd> items{Eigen::Vector2d(1, 2), Eigen::Vector2d(3, -1), Eigen::Vector2d(3, -1),
                              Eigen::Vector2d(1, 2)};
  EXPECT_NEAR(banach_statistic(items, canonical_signs(2, 2), NormSpec(NormSpec::Space::sequence, 1.0)).value,
              0.0, 1e-14);
}

TEST(Banach, OperatorStatisticMatchesIndependentPath) {
  std::vector<SymOperator> ops;
  for (unsigned s = 0; s < 10; ++s) ops.emplace_back(oracle::random_psd(5, s));
  const auto labels = canonical_signs(5, 5);
  const NormSpec s1(NormSpec::Space::schatten, 1.0);
  const auto st = banach_statistic(ops, labels, s1);
  MatrixXd diff = MatrixXd::Zero(5, 5);
  for (std::size_t i = 0; i < 10; ++i) diff += (i < 5 ? 1.0 : -1.0) * ops[i].matrix();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(diff);
  EXPECT_NEAR(st.value, es.eigenvalues().cwiseAbs().sum(), 1e-10 * st.value);

  MatrixXd mean = MatrixXd::Zero(5, 5);
  for (const auto& op : ops) mean += op.matrix() / 10.0;
  MatrixXd sq = MatrixXd::Zero(5, 5);
  for (const auto& op : ops) sq += (op.matrix() - mean) * (op.matrix() - mean);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eq(sq);
  const double ref = eq.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  EXPECT_NEAR(st.scale, ref, 1e-10 * ref);
}

TEST(Banach, CommutativeScaleIsRootCovariance) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::vector<VectorXd> items(12, VectorXd(4));
  for (auto& x : items) {
    for (int j = 0; j < 4; ++j) x[j] = z(rng);
  }
  for (double q : {1.0, 2.0, NormSpec::infinity}) {
    const auto st = banach_statistic(items, canonical_signs(6, 6), NormSpec(NormSpec::Space::sequence, q));
    const MatrixXd cov = empirical_covariance(items, true).matrix();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const double sq = std::isinf(q) ? root.maxCoeff() : std::pow(root.array().pow(q).sum(), 1.0 / q);
    EXPECT_NEAR(st.scale, std::sqrt(11.0) * sq, 1e-10 * st.scale) << q;
  }
}

TEST(Banach, ScaleInvariantUnderRelabeling) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  const VectorXd g = uniform_grid(9);
  std::vector<GridCurve> curves;
  for (int i = 0; i < 10; ++i) {
    VectorXd v(9);
    for (int j = 0; j < 9; ++j) v[j] = z(rng);
    curves.emplace_back(g, v);
  }
  const NormSpec l2(NormSpec::Space::function, 2.0);
  const double base = banach_statistic(curves, canonical_signs(5, 5), l2).scale;
  for (int t = 0; t < 20; ++t) {
    std::shuffle(curves.begin(), curves.end(), rng);
    const auto signs = sample_sign_vector(10, rng);
    EXPECT_NEAR(banach_statistic(curves, signs, l2).scale, base, 1e-12 * base);
  }
}

TEST(Banach, Errors) {
  std::vector<VectorXd> items(6, VectorXd::Ones(2));
  items[0][0] = 2.0;
  const NormSpec l2(NormSpec::Space::sequence, 2.0);
  EXPECT_THROW((void)banach_statistic(items, canonical_signs(4, 2), l2), UnsupportedDesignError);
  EXPECT_THROW((void)banach_statistic(items, canonical_signs(3, 3), NormSpec(NormSpec::Space::schatten, 2.0)),
               DomainError);
}

TEST(Banach, BoundExamples) {
  const BoundConfig cfg;
  EXPECT_EQ(commutative_tail_bound({0.0, 1.0, StatisticKind::banach_sum}, cfg), 1.0);
  EXPECT_NEAR(commutative_tail_bound({8.0, 1.0, StatisticKind::banach_sum}, cfg), std::exp(-1.0), 1e-15);
  EXPECT_EQ(noncommutative_tail_bound({0.0, 2.0, StatisticKind::banach_sum}, cfg), 1.0);
  EXPECT_NEAR(noncommutative_tail_bound({16.0, 2.0, StatisticKind::banach_sum}, cfg), std::exp(-1.0), 1e-15);
}

TEST(Banach, BoundsMonotoneInTScaleAndC) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int i = 0; i < 500; ++i) {
    const double t = u(rng);
    const double s = u(rng);
    BoundConfig lo;
    BoundConfig hi;
    lo.c_commutative = lo.c_noncommutative = lo.c_sync = 16.0;
    hi.c_commutative = hi.c_noncommutative = hi.c_sync = 64.0;
    const TestStatistic a{t, s, StatisticKind::banach_sum};
    const TestStatistic b{t * 1.1, s, StatisticKind::banach_sum};
    const TestStatistic c{t, s * 1.1, StatisticKind::banach_sum};
    const TestStatistic sa{t, s, StatisticKind::sync_global};
    const TestStatistic sb{t * 1.1, s, StatisticKind::sync_global};
    using BoundFn = double (*)(const TestStatistic&, const BoundConfig&);
    for (const BoundFn f : {BoundFn{&commutative_tail_bound}, BoundFn{&noncommutative_tail_bound}}) {
      const double p = f(a, hi);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      EXPECT_LE(f(b, hi), p);
      EXPECT_GE(f(c, hi), p);
      EXPECT_LE(f(a, lo), p);
    }
    EXPECT_LE(sync_tail_bound(sb, hi), sync_tail_bound(sa, hi));
    EXPECT_LE(sync_tail_bound(sa, lo), sync_tail_bound(sa, hi));
  }
}

TEST(Sync, MatrixConstruction) {
  const std::vector<std::vector<double>> two{{1, 2}, {3, 4}};
  const MatrixXd x2 = build_sync_matrix(two);
  ASSERT_EQ(x2.cols(), 1);
  EXPECT_EQ(x2.col(0), Eigen::Vector4d(1, 2, 3, 4));

  const std::vector<std::vector<double>> three{{1, 2}, {3, 4}, {5, 6}};
  const MatrixXd x3 = build_sync_matrix(three);
  ASSERT_EQ(x3.rows(), 4);
  ASSERT_EQ(x3.cols(), 3);
  EXPECT_EQ(x3.col(0), Eigen::Vector4d(1, 2, 3, 4));
  EXPECT_EQ(x3.col(1), Eigen::Vector4d(1, 2, 5, 6));
  EXPECT_EQ(x3.col(2), Eigen::Vector4d(3, 4, 5, 6));

  const std::vector<std::vector<double>> bad{{1, 2}, {3}};
  EXPECT_THROW((void)build_sync_matrix(bad), UnsupportedDesignError);
}

TEST(Sync, GramDiagonal) {
  std::mt19937_64 rng(6);
  std::vector<std::vector<double>> s(4);
  for (auto& v : s) v = normals(5, rng);
  const MatrixXd x = build_sync_matrix(s);
  const MatrixXd g = x.transpose() * x;
  std::size_t c = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j, ++c) {
      double ref = 0.0;
      for (double v : s[i]) ref += v * v;
      for (double v : s[j]) ref += v * v;
      EXPECT_NEAR(g(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)), ref, 1e-12);
    }
  }
}

TEST(Sync, StatisticExamples) {
  const MatrixXd zero = MatrixXd::Zero(4, 3);
  EXPECT_EQ(sync_statistic(zero, canonical_signs(2, 2)).value, 0.0);

  const std::vector<std::vector<double>> two{{1, 1}, {-1, -1}};
  EXPECT_NEAR(sync_statistic(build_sync_matrix(two), canonical_signs(2, 2)).value, 4.0, 1e-15);

  const std::vector<Sign> unbalanced{1, 1, 1, -1};
  EXPECT_THROW((void)sync_statistic(zero, unbalanced), DomainError);
}

TEST(Sync, QuadraticForm) {
  std::mt19937_64 rng(7);
  std::vector<std::vector<double>> s(3);
  for (auto& v : s) v = normals(4, rng);
  const MatrixXd x = build_sync_matrix(s);
  const MatrixXd a = x * x.transpose();
  for (int t = 0; t < 10; ++t) {
    const auto eps = sample_sign_vector(8, rng);
    double ref = 0.0;
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) ref += a(i, j) * eps[i] * eps[j];
    }
    const double v = sync_statistic(x, eps).value;
    EXPECT_NEAR(v * v, ref, 1e-10 * std::max(1.0, ref));
  }
}

TEST(Sync, BoundExamplesAndTwoSampleReduction) {
  const BoundConfig cfg;
  EXPECT_EQ(sync_tail_bound({0.0, 1.0, StatisticKind::sync_global}, cfg), 1.0);
  EXPECT_NEAR(sync_tail_bound({8.0, 1.0, StatisticKind::sync_global}, cfg), std::exp(-1.0), 1e-15);

  std::mt19937_64 rng(8);
  const std::vector<std::vector<double>> two{normals(6, rng), normals(6, rng)};
  const MatrixXd x = center_columns(build_sync_matrix(two));
  double ss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) ss += x(i, 0) * x(i, 0);
  EXPECT_NEAR(sync_statistic(x, canonical_signs(6, 6)).scale, ss, 1e-12 * ss);
}

TEST(GlobalStatistic, Examples) {
  const std::vector<std::size_t> sizes2{3, 5};
  const std::vector<double> one{0.7};
  EXPECT_NEAR(global_statistic(one, sizes2), 15.0 * 0.49, 1e-14);

  const std::vector<std::size_t> sizes3{2, 3, 4};
  const std::vector<double> zeros(3, 0.0);
  EXPECT_EQ(global_statistic(zeros, sizes3), 0.0);
  const std::vector<double> vals{0.3, 1.2, 0.8};
  double ref = 0.0;
  std::size_t p = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (j <= i) continue;
      ref += static_cast<double>(sizes3[i] * sizes3[j]) * vals[p] * vals[p];
      ++p;
    }
  }
  EXPECT_NEAR(global_statistic(vals, sizes3), ref, 1e-14);
  EXPECT_THROW((void)global_statistic(one, sizes3), DomainError);
}
