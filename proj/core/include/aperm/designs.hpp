#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aperm/betacal.hpp"
#include "aperm/bounds.hpp"
#include "aperm/ingest.hpp"
#include "aperm/mc_oracle.hpp"

namespace aperm {

enum class Method { univariate, commutative, noncommutative, synchronized };
enum class Correction { none, bonferroni, holm };

/// How the Banach bound scale is formed for one pairing.
///   pairwise: the pairing's own pooled items (exact scale)
///   pooled:   all items of the block/design, centred at the block mean. The
///             pair's second-moment operator is dominated by the pooled one in
///             Loewner order, so the bound stays valid; one decomposition per
///             block instead of one per pairing.
enum class ScaleMode { pairwise, pooled };

[[nodiscard]] const char* to_string(Method m) noexcept;
[[nodiscard]] const char* to_string(Correction c) noexcept;
[[nodiscard]] const char* to_string(ScaleMode s) noexcept;

struct PValueReport {
  std::string name;
  double statistic = 0.0;
  double scale = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;   // calibrated (or raw when calibration is off / failed)
  double p_corrected = 1.0;  // after the multiple-testing correction
  std::optional<McEstimate> p_mc;
  std::optional<NormSpec> norm;
  Method method = Method::univariate;
  Correction correction = Correction::none;
  std::optional<CalibrationRecord> calibration;
  std::vector<std::string> flags;
};

struct TestOptions {
  NormSpec norm{NormSpec::Space::sequence, 2.0};
  BoundConfig bounds;
  std::size_t r = kDefaultCalibrationDraws;
  std::uint64_t seed = 0;
  Correction correction = Correction::none;
  std::size_t mc_perms = 0;  // 0 disables the Monte-Carlo cross-check
  ScaleMode scale_mode = ScaleMode::pairwise;
  bool strict = false;       // calibration failure becomes an error
  std::size_t threads = 1;
};

// ---------------------------------------------------------------------------
// Multiple testing

/// min(1, m p) for m hypotheses.
[[nodiscard]] std::vector<double> bonferroni(std::span<const double> p);

/// Holm step-down adjusted p-values, returned in input order.
[[nodiscard]] std::vector<double> holm(std::span<const double> p);

[[nodiscard]] std::vector<double> apply_correction(std::span<const double> p, Correction c);

// ---------------------------------------------------------------------------
// One-way designs

struct PairwiseResult {
  std::vector<std::string> levels;
  std::vector<PValueReport> reports;  // lexicographic (i,j) order
};

/// All C(k,2) pairwise tests, one per pair of labels. Scalars use the
/// univariate bound with the closed-form beta adjustment; vectors and curves
/// the commutative bound; operators the non-commutative bound. Banach-space
/// pairs are calibrated with the empirical beta transform.
[[nodiscard]] PairwiseResult pairwise_tests(const LabeledSample& sample, const TestOptions& opt);

/// Two-label convenience wrapper.
[[nodiscard]] PValueReport two_sample_test(const LabeledSample& sample, const TestOptions& opt);

/// Synchronized global k-sample test (balanced designs only).
[[nodiscard]] PValueReport global_test(const LabeledSample& sample, const TestOptions& opt);

/// Lower-triangular table of log10 p-values; row i lists pairs (i, j<i).
[[nodiscard]] std::vector<std::vector<double>> log10_lower_triangle(
    const PairwiseResult& result, bool use_corrected);

// ---------------------------------------------------------------------------
// Latin square

/// Residuals after removing the grand mean and the row and column effects,
/// computed separately within each block when blocks are present.
[[nodiscard]] LabeledSample center_by_design(const LabeledSample& sample);

enum class FactorStatus { rejected, not_rejected, not_tested, untestable };
[[nodiscard]] const char* to_string(FactorStatus s) noexcept;

struct FactorDecision {
  std::string factor;  // "row", "column" or "treatment"
  double statistic = 0.0;
  double scale = 0.0;
  std::optional<double> p_raw;
  std::optional<double> p_value;
  FactorStatus status = FactorStatus::not_tested;
  std::optional<CalibrationRecord> calibration;
  std::vector<std::string> flags;
};

enum class StepdownMode { analytic, monte_carlo };

struct StepdownOptions {
  TestOptions test;
  double level = 0.05;
  StepdownMode mode = StepdownMode::analytic;
  std::size_t n_perms = 1000;  // monte_carlo mode only
};

/// Step-down test of the row, column and treatment factors of an
/// unreplicated Latin square, largest factor statistic first. Returns the
/// decisions in testing order.
[[nodiscard]] std::vector<FactorDecision> latin_square_stepdown(const LabeledSample& sample,
                                                                const StepdownOptions& opt);

// ---------------------------------------------------------------------------
// Complete randomized block design

enum class CrbdMode { means, covariances };

struct CrbdOptions {
  TestOptions test;
  CrbdMode mode = CrbdMode::means;
  /// Curves given in covariance mode become operators: chunks of this many
  /// curves per cell, or rank-one outer products when 0.
  std::size_t operator_group_size = 0;
  bool compute_global = true;
};

struct CrbdResult {
  PairwiseResult pairwise;
  std::optional<PValueReport> global;
  std::vector<std::string> blocks;
  std::vector<std::string> notes;
};

/// Pairwise treatment tests with statistics and scales summed over blocks,
/// calibrated with block-synchronized sign draws, plus a synchronized global
/// test. Requires balanced cells.
[[nodiscard]] CrbdResult crbd_test(const LabeledSample& sample, const CrbdOptions& opt);

}  // namespace aperm
