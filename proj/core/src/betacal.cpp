#include "aperm/betacal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aperm/errors.hpp"

namespace aperm {

BetaParams analytic_beta_params(const SampleSplit& split) {
  const auto c = static_cast<double>(split.ceil_kappa_plus_one());
  // 2 + kappa + 1/kappa = n^2 / (m1 m2), exact in the group sizes.
  const auto m1 = static_cast<double>(split.m1());
  const auto m2 = static_cast<double>(split.m2());
  const auto n = static_cast<double>(split.n());
  const double alpha = c * c * c * m1 * m2 / (n * n);
  const double c0 = std::exp(0.5 * std::log(alpha) + log_gamma(alpha) - log_gamma(alpha + 0.5));
  return BetaParams(alpha, 0.5, c0);
}

double analytic_beta_adjust(double p_raw, const SampleSplit& split) {
  if (!(p_raw > 0.0) || p_raw > 1.0) throw DomainError("raw p-value must lie in (0, 1]");
  const BetaParams params = analytic_beta_params(split);
  return std::min(1.0, *params.c0() * reg_inc_beta(p_raw, params));
}

BetaParams mom_beta(std::span<const double> pvalues) {
  const std::size_t r = pvalues.size();
  if (r < 2) throw CalibrationError("moment fit needs at least two p-values");
  double mean = 0.0;
  for (const double p : pvalues) {
    if (!std::isfinite(p)) throw CalibrationError("non-finite null p-value");
    mean += p;
  }
  mean /= static_cast<double>(r);
  double ss = 0.0;
  for (const double p : pvalues) ss += (p - mean) * (p - mean);
  const double var = ss / static_cast<double>(r - 1);
  // Rounding alone leaves a variance of order (eps * mean)^2 on constant input.
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * mean;
  if (!(var > noise * noise)) throw CalibrationError("null p-values have zero variance");
  if (!(mean > 0.0) || !(mean < 1.0)) throw CalibrationError("null p-value mean is 0 or 1");
  const double alpha = mean * mean * (1.0 - mean) / var - mean;
  const double beta = (mean * (1.0 - mean) / var - 1.0) * (1.0 - mean);
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw CalibrationError("moment estimates are not positive");
  }
  return BetaParams(alpha, beta);
}

double empirical_beta_transform(double p0, const CalibrationRecord& record) {
  if (!(p0 >= 0.0) || p0 > 1.0) throw DomainError("p-value must lie in [0, 1]");
  const BetaParams& params = record.params;
  if (!(params.alpha() > 0.0) || !(params.beta() > 0.0)) {
    throw CalibrationError("calibration parameters are not positive");
  }
  return reg_inc_beta(p0, params);
}

CalibrationRecord calibrate_from_statistics(std::span<const double> statistics,
                                            const std::function<double(double)>& bound,
                                            std::uint64_t seed) {
  CalibrationRecord record;
  record.r = statistics.size();
  record.seed = seed;
  record.null_pvalues.reserve(statistics.size());
  for (const double t : statistics) record.null_pvalues.push_back(bound(t));
  record.params = mom_beta(record.null_pvalues);
  return record;
}

CalibrationRecord calibrate(const CalibrationContext& context, std::size_t r, std::uint64_t seed,
                            std::size_t threads) {
  if (r < 2) throw DomainError("calibration needs r >= 2 draws");
  if (!context.statistic || !context.bound) throw DomainError("incomplete calibration context");
  const auto stats = permutation_statistics(context.statistic, context.strata, r, seed,
                                            Stream::calibration, threads);
  return calibrate_from_statistics(stats, context.bound, seed);
}

}  // namespace aperm
