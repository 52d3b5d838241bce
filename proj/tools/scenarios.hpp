#pragma once

// Replication studies and the analytic-vs-Monte-Carlo benchmark driven by the
// `aperm simulate` and `aperm benchmark` commands.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "aperm/designs.hpp"
#include "aperm/linalg.hpp"

namespace aperm::sim {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One replicate at one grid point. Methods a scenario does not run are NaN.
struct Replicate {
  double x = 0.0;
  std::size_t rep = 0;
  double p_raw = kMissing;
  double p_adjusted = kMissing;
  double p_mc = kMissing;
  double p_classical = kMissing;
};

/// Per grid point means of p and of log2 p for each method.
struct SummaryRow {
  double x = 0.0;
  std::size_t reps = 0;
  double mean_p_raw = kMissing;
  double mean_p_adjusted = kMissing;
  double mean_p_mc = kMissing;
  double mean_p_classical = kMissing;
  double mean_log2_raw = kMissing;
  double mean_log2_adjusted = kMissing;
  double mean_log2_mc = kMissing;
  double mean_log2_classical = kMissing;
};

[[nodiscard]] std::vector<SummaryRow> summarize(std::span<const Replicate> replicates);

struct UniTwoSampleConfig {
  std::size_t m1 = 100;
  std::size_t m2 = 100;
  std::vector<double> mu;
  std::size_t reps = 200;
  std::size_t mc_perms = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// N(0,1) against N(mu,1): raw univariate bound, closed-form beta adjustment,
/// Monte-Carlo permutation p-value and the pooled two-sample t-test.
[[nodiscard]] std::vector<Replicate> run_uni_two_sample(const UniTwoSampleConfig& cfg);

struct UniKSampleConfig {
  std::size_t k = 4;
  std::size_t n = 20;
  std::vector<double> shift;
  std::size_t reps = 200;
  std::size_t mc_perms = 1000;
  std::size_t r = kDefaultCalibrationDraws;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// k groups of n N(0,1) draws, the last shifted: synchronized bound (raw and
/// calibrated), synchronized Monte-Carlo test and the one-way F test.
[[nodiscard]] std::vector<Replicate> run_uni_ksample(const UniKSampleConfig& cfg);

/// Exponential kernel exp(-|s-t|/length) on a grid.
[[nodiscard]] SymOperator exponential_kernel(const Eigen::VectorXd& grid, double length,
                                             double variance = 1.0);

/// Gaussian kernel v exp(-(s-t)^2 / (2 length^2)) plus a nugget on the diagonal.
[[nodiscard]] SymOperator gaussian_kernel(const Eigen::VectorXd& grid, double length,
                                          double variance, double nugget);

struct CurvesMeanConfig {
  std::size_t grid_points = 20;
  std::size_t n = 30;  // curves per group
  std::vector<double> shift;
  std::size_t reps = 100;
  std::size_t mc_perms = 1000;
  std::size_t r = kDefaultCalibrationDraws;
  double q = 2.0;  // L^q norm
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Two groups of Gaussian-process curves, the second with mean shift * sin(pi t).
[[nodiscard]] std::vector<Replicate> run_curves_mean(const CurvesMeanConfig& cfg);

struct ProcrustesConfig {
  std::size_t grid_points = 20;
  std::size_t n = 30;
  std::vector<double> gamma;
  std::size_t reps = 200;
  std::size_t mc_perms = 512;
  std::size_t r = kDefaultCalibrationDraws;
  double q = 1.0;  // S^q norm
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// The two fixed covariance operators of the gamma sweep.
struct OperatorPair {
  SymOperator sigma_a;
  SymOperator sigma_b;
};
[[nodiscard]] OperatorPair procrustes_operators(const Eigen::VectorXd& grid);

/// Group one from Sigma_a, group two from the interpolated Sigma(gamma);
/// items are rank-one operators centred at the group mean.
[[nodiscard]] std::vector<Replicate> run_procrustes(const ProcrustesConfig& cfg);

enum class NullKind { curves, operators };

struct NullCalibrationConfig {
  NullKind kind = NullKind::curves;
  double q = 2.0;
  std::size_t reps = 100;
  std::size_t n = 30;           // items per group
  std::size_t group_size = 10;  // curves per covariance operator
  std::size_t grid_points = 20;
  std::size_t r = kDefaultCalibrationDraws;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Both groups drawn from one law. Returns raw and adjusted p-values (x = 0).
[[nodiscard]] std::vector<Replicate> run_null_calibration(const NullCalibrationConfig& cfg);

// ---------------------------------------------------------------------------
// Classical reference tests

/// Two-sided pooled-variance two-sample t-test.
[[nodiscard]] double t_test_pvalue(std::span<const double> a, std::span<const double> b);

/// One-way ANOVA F-test.
[[nodiscard]] double f_test_pvalue(std::span<const std::vector<double>> groups);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against Uniform[0,1], asymptotic
/// p-value with Stephens' small-sample correction.
[[nodiscard]] KsResult ks_uniform(std::span<const double> values);

/// Spearman rank correlation (average ranks for ties).
[[nodiscard]] double spearman(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Analytic vs Monte-Carlo CRBD benchmark

struct CrbdBenchConfig {
  std::size_t dim = 100;
  std::size_t k = 12;
  std::size_t blocks = 4;
  std::size_t per_cell = 12;
  std::size_t n_perms = 2000;     // per hypothesis
  std::size_t timed_perms = 3;    // permutations actually executed
  double q = 1.0;
  std::uint64_t seed = 0;
};

struct CrbdBenchReport {
  std::size_t pairings = 0;
  double analytic_seconds = 0.0;
  std::uint64_t analytic_decompositions = 0;
  std::uint64_t exact_scale_decompositions = 0;  // pairwise scales, uncalibrated
  std::uint64_t calibrated_decompositions = 0;   // pooled scales, calibrated
  double per_perm_seconds = 0.0;
  std::uint64_t per_perm_decompositions = 0;
  std::size_t mc_permutations = 0;  // pairings * n_perms
  double mc_extrapolated_seconds = 0.0;
  std::uint64_t mc_extrapolated_decompositions = 0;
  double speedup = 0.0;
  std::vector<double> statistics;  // observed pairwise statistics
};

/// Synthetic rank-one-operator CRBD data for the benchmark.
[[nodiscard]] LabeledSample crbd_bench_sample(const CrbdBenchConfig& cfg);

[[nodiscard]] CrbdBenchReport run_crbd_bench(const CrbdBenchConfig& cfg);

}  // namespace aperm::sim
