#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "aperm/rng.hpp"

namespace aperm {

/// +1 marks group one, -1 group two.
using Sign = std::int8_t;
using Signs = std::vector<Sign>;

/// Recomputes a statistic under a group reassignment. Must be safe to call
/// concurrently.
using StatisticFn = std::function<double(std::span<const Sign>)>;

/// One block of positions that is reassigned independently: `positives` of
/// its `size` entries receive +1. Concatenated strata describe block-wise
/// (synchronized) draws.
struct Stratum {
  std::size_t size;
  std::size_t positives;
};

/// Monte-Carlo permutation p-value with the add-one convention.
struct McEstimate {
  double p_hat = 1.0;
  std::size_t n_perms = 0;
  double std_err = 0.0;
  std::size_t exceed_count = 0;

  static McEstimate from_counts(std::size_t exceed_count, std::size_t n_perms);
};

/// Uniform over all C(n, n/2) zero-sum sign vectors.
[[nodiscard]] Signs sample_sign_vector(std::size_t n, std::mt19937_64& rng);

/// Uniform over all C(n, m1) assignments with m1 entries equal to +1.
[[nodiscard]] Signs sample_assignment(std::size_t n, std::size_t m1, std::mt19937_64& rng);

/// Independent uniform draws within each stratum, concatenated.
[[nodiscard]] Signs sample_stratified(std::span<const Stratum> strata, std::mt19937_64& rng);

/// +1 on the first m1 positions, -1 on the next m2.
[[nodiscard]] Signs canonical_signs(std::size_t m1, std::size_t m2);

[[nodiscard]] bool is_zero_sum(std::span<const Sign> signs) noexcept;

/// Ties count as exceedances. A relative slack of 1e-12 absorbs summation
/// order noise between algebraically equal statistics.
[[nodiscard]] bool ties_or_exceeds(double statistic, double observed) noexcept;

/// Statistics of `count` draws, draw i using substream (seed, stream, i).
[[nodiscard]] std::vector<double> permutation_statistics(const StatisticFn& statistic,
                                                         std::span<const Stratum> strata,
                                                         std::size_t count, std::uint64_t seed,
                                                         Stream stream,
                                                         std::size_t threads = 1);

[[nodiscard]] McEstimate mc_pvalue(const StatisticFn& statistic, double observed,
                                   std::span<const Stratum> strata, std::size_t n_perms,
                                   std::uint64_t seed, std::size_t threads = 1);

/// Single-block convenience overload: n positions, m1 of them in group one.
[[nodiscard]] McEstimate mc_pvalue(const StatisticFn& statistic, double observed, std::size_t n,
                                   std::size_t m1, std::size_t n_perms, std::uint64_t seed,
                                   std::size_t threads = 1);

/// Exact proportion of the C(n, m1) reassignments whose statistic ties or
/// exceeds `observed`. Refuses more than 10^4 reassignments.
[[nodiscard]] double exhaustive_pvalue(const StatisticFn& statistic, double observed,
                                       std::size_t n, std::size_t m1);

inline constexpr std::size_t kExhaustiveLimit = 10000;

/// Synchronized k-sample Monte-Carlo test: one zero-sum sign vector per draw
/// is applied to every column of the 2m x C(k,2) matrix.
[[nodiscard]] McEstimate mc_sync_pvalue(const Eigen::MatrixXd& x, std::size_t n_perms,
                                        std::uint64_t seed, std::size_t threads = 1);

[[nodiscard]] std::uint64_t binomial(std::size_t n, std::size_t k);

}  // namespace aperm
