#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "aperm/linalg.hpp"
#include "aperm/mc_oracle.hpp"

namespace aperm {

/// Group sizes of a two-sample split. kappa = max/min is kept as an exact
/// ratio of integers.
class SampleSplit {
 public:
  SampleSplit(std::size_t m1, std::size_t m2);

  [[nodiscard]] std::size_t m1() const noexcept { return m1_; }
  [[nodiscard]] std::size_t m2() const noexcept { return m2_; }
  [[nodiscard]] std::size_t n() const noexcept { return m1_ + m2_; }
  [[nodiscard]] std::size_t larger() const noexcept { return m1_ > m2_ ? m1_ : m2_; }
  [[nodiscard]] std::size_t smaller() const noexcept { return m1_ < m2_ ? m1_ : m2_; }
  [[nodiscard]] double kappa() const noexcept;
  [[nodiscard]] bool balanced() const noexcept { return m1_ == m2_; }

  /// ceil(kappa + 1) = ceil(n / min), in integer arithmetic.
  [[nodiscard]] std::size_t ceil_kappa_plus_one() const noexcept;

 private:
  std::size_t m1_;
  std::size_t m2_;
};

struct BoundConfig {
  double c_commutative = 64.0;
  double c_noncommutative = 64.0;
  double c_sync = 64.0;
  bool calibrate = true;

  void validate() const;
};

enum class StatisticKind { univariate, banach_sum, sync_global };

struct TestStatistic {
  double value = 0.0;
  double scale = 0.0;
  StatisticKind kind = StatisticKind::univariate;
};

// ---------------------------------------------------------------------------
// Univariate two-sample test

/// |mean(group 1) - mean(group 2)| / s_n with s_n the standard deviation of
/// the pooled values. Group one is the first split.m1() values.
[[nodiscard]] TestStatistic univariate_statistic(std::span<const double> values,
                                                 const SampleSplit& split);

/// The same statistic under an arbitrary assignment (+1 = group one).
class UnivariateStatistic {
 public:
  explicit UnivariateStatistic(std::span<const double> values);

  [[nodiscard]] double evaluate(std::span<const Sign> assignment) const;
  [[nodiscard]] double pooled_sd() const noexcept { return sd_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
  double sd_;
};

/// min(1, exp(-n t^2 / (2 ceil(kappa+1)^3))).
[[nodiscard]] double univariate_tail_bound(const TestStatistic& stat, const SampleSplit& split);

// ---------------------------------------------------------------------------
// Banach-space sum-difference statistics

using BanachItems =
    std::variant<std::vector<Eigen::VectorXd>, std::vector<GridCurve>, std::vector<SymOperator>>;

/// Prepared form of ||sum_i eps_i X_i|| for vectors (l^q), curves (L^q) or
/// symmetric operators (S^q). Items are centred about their pooled mean,
/// which leaves the statistic unchanged for zero-sum signs.
class BanachSum {
 public:
  BanachSum(const BanachItems& items, const NormSpec& spec);

  [[nodiscard]] double evaluate(std::span<const Sign> signs) const;

  /// sqrt(n-1) ||Sigma_hat^{1/2}||_{S^q} for vectors and curves (the curve
  /// covariance is taken as an integral operator with trapezoid weights), or
  /// the non-commutative scale for operators. One decomposition.
  [[nodiscard]] double scale() const;

  [[nodiscard]] bool is_operator() const noexcept { return !operators_.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] const NormSpec& norm() const noexcept { return spec_; }

 private:
  NormSpec spec_;
  std::size_t n_ = 0;
  // vectors / curves: d x n centred data and quadrature weights
  Eigen::MatrixXd data_;
  Eigen::VectorXd weights_;
  bool weighted_ = false;
  // operators: centred items
  std::vector<Eigen::MatrixXd> operators_;
};

/// Observed statistic for a balanced two-group assignment.
[[nodiscard]] TestStatistic banach_statistic(const BanachItems& items,
                                             std::span<const Sign> labels, const NormSpec& spec);

/// min(1, exp(-t^2 / (c scale^2))), c = cfg.c_commutative.
[[nodiscard]] double commutative_tail_bound(const TestStatistic& stat, const BoundConfig& cfg);

/// min(1, exp(-t^2 / (c S^2))), c = cfg.c_noncommutative.
[[nodiscard]] double noncommutative_tail_bound(const TestStatistic& stat, const BoundConfig& cfg);

// ---------------------------------------------------------------------------
// Synchronized k-sample statistics

/// 2m x C(k,2) matrix whose (i,j) column stacks sample i over sample j,
/// columns in lexicographic (i,j) order.
[[nodiscard]] Eigen::MatrixXd build_sync_matrix(std::span<const std::vector<double>> samples);

/// Subtracts each column's mean; zero-sum statistics are unaffected.
[[nodiscard]] Eigen::MatrixXd center_columns(const Eigen::MatrixXd& x);

/// value = ||X^T eps||_2, scale = ||X X^T||_{S^2}.
[[nodiscard]] TestStatistic sync_statistic(const Eigen::MatrixXd& x, std::span<const Sign> signs);

/// min(1, exp(-t^2 / (c S))). S is already a squared-scale quantity.
[[nodiscard]] double sync_tail_bound(const TestStatistic& stat, const BoundConfig& cfg);

/// sum_{i<j} n_i n_j (T^{(ij)})^2 with pairwise values in lexicographic order.
[[nodiscard]] double global_statistic(std::span<const double> pairwise,
                                      std::span<const std::size_t> sizes);

/// Lexicographic (i,j), i<j, pairs of k levels.
[[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> level_pairs(std::size_t k);

}  // namespace aperm
