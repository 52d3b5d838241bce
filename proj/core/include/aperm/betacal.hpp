#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "aperm/bounds.hpp"
#include "aperm/mc_oracle.hpp"
#include "aperm/specfun.hpp"

namespace aperm {

/// Null p-values and the Beta law fitted to them.
struct CalibrationRecord {
  std::size_t r = 0;
  std::vector<double> null_pvalues;
  BetaParams params{1.0, 1.0};
  std::uint64_t seed = 0;
};

/// alpha = ceil(kappa+1)^3 / (2 + kappa + 1/kappa), beta = 1/2 and
/// C0 = alpha^{1/2} Gamma(alpha) / Gamma(alpha + 1/2).
[[nodiscard]] BetaParams analytic_beta_params(const SampleSplit& split);

/// min(1, C0 I(p_raw; alpha, 1/2)).
[[nodiscard]] double analytic_beta_adjust(double p_raw, const SampleSplit& split);

/// Method-of-moments Beta fit. Throws CalibrationError when the sample
/// variance is zero, the mean is 0 or 1, or either estimate is not positive.
[[nodiscard]] BetaParams mom_beta(std::span<const double> pvalues);

/// I(p0; alpha_hat, beta_hat).
[[nodiscard]] double empirical_beta_transform(double p0, const CalibrationRecord& record);

/// What calibration needs from a test: how to redraw a null statistic and how
/// to turn a statistic into a raw bound p-value.
struct CalibrationContext {
  std::vector<Stratum> strata;
  StatisticFn statistic;
  std::function<double(double)> bound;
};

inline constexpr std::size_t kDefaultCalibrationDraws = 10;

/// Draws r null reassignments, evaluates their raw bound p-values and fits a
/// Beta law by moments. Deterministic in `seed`.
[[nodiscard]] CalibrationRecord calibrate(const CalibrationContext& context, std::size_t r,
                                          std::uint64_t seed, std::size_t threads = 1);

/// Fits a record from already computed null statistics.
[[nodiscard]] CalibrationRecord calibrate_from_statistics(std::span<const double> statistics,
                                                          const std::function<double(double)>& bound,
                                                          std::uint64_t seed);

}  // namespace aperm
