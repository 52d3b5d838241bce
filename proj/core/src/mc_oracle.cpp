#include "aperm/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "aperm/errors.hpp"
#include "aperm/parallel.hpp"

namespace aperm {

McEstimate McEstimate::from_counts(std::size_t exceed_count, std::size_t n_perms) {
  McEstimate e;
  e.exceed_count = exceed_count;
  e.n_perms = n_perms;
  e.p_hat = static_cast<double>(exceed_count + 1) / static_cast<double>(n_perms + 1);
  e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n_perms));
  return e;
}

Signs sample_assignment(std::size_t n, std::size_t m1, std::mt19937_64& rng) {
  if (m1 > n) throw DomainError("group size exceeds the number of positions");
  Signs s(n, Sign{-1});
  std::fill_n(s.begin(), m1, Sign{1});
  std::shuffle(s.begin(), s.end(), rng);
  return s;
}

Signs sample_sign_vector(std::size_t n, std::mt19937_64& rng) {
  if (n == 0 || n % 2 != 0) {
    throw DomainError("zero-sum sign vectors need an even positive length (got " +
                      std::to_string(n) + ")");
  }
  return sample_assignment(n, n / 2, rng);
}

Signs sample_stratified(std::span<const Stratum> strata, std::mt19937_64& rng) {
  Signs out;
  for (const auto& st : strata) {
    const Signs part = sample_assignment(st.size, st.positives, rng);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Signs canonical_signs(std::size_t m1, std::size_t m2) {
  Signs s(m1 + m2, Sign{-1});
  std::fill_n(s.begin(), m1, Sign{1});
  return s;
}

bool is_zero_sum(std::span<const Sign> signs) noexcept {
  long total = 0;
  for (const Sign s : signs) total += s;
  return total == 0;
}

bool ties_or_exceeds(double statistic, double observed) noexcept {
  return statistic >= observed - 1e-12 * std::max(1.0, std::fabs(observed));
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    if (result > std::numeric_limits<std::uint64_t>::max() / num) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    result = result * num / i;
  }
  return result;
}

std::vector<double> permutation_statistics(const StatisticFn& statistic,
                                           std::span<const Stratum> strata, std::size_t count,
                                           std::uint64_t seed, Stream stream,
                                           std::size_t threads) {
  std::vector<double> out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    auto rng = substream(seed, stream, i);
    const Signs signs = sample_stratified(strata, rng);
    out[i] = statistic(signs);
  });
  return out;
}

McEstimate mc_pvalue(const StatisticFn& statistic, double observed,
                     std::span<const Stratum> strata, std::size_t n_perms, std::uint64_t seed,
                     std::size_t threads) {
  if (n_perms < 1) throw DomainError("Monte-Carlo test needs at least one permutation");
  const auto draws =
      permutation_statistics(statistic, strata, n_perms, seed, Stream::monte_carlo, threads);
  const auto exceed = static_cast<std::size_t>(std::count_if(
      draws.begin(), draws.end(), [&](double t) { return ties_or_exceeds(t, observed); }));
  return McEstimate::from_counts(exceed, n_perms);
}

McEstimate mc_pvalue(const StatisticFn& statistic, double observed, std::size_t n,
                     std::size_t m1, std::size_t n_perms, std::uint64_t seed,
                     std::size_t threads) {
  const Stratum whole{n, m1};
  return mc_pvalue(statistic, observed, std::span<const Stratum>(&whole, 1), n_perms, seed,
                   threads);
}

double exhaustive_pvalue(const StatisticFn& statistic, double observed, std::size_t n,
                         std::size_t m1) {
  if (m1 > n) throw DomainError("group size exceeds the number of positions");
  const std::uint64_t total = binomial(n, m1);
  if (total > kExhaustiveLimit) {
    throw SizeError("exhaustive enumeration of C(" + std::to_string(n) + "," +
                    std::to_string(m1) + ") reassignments exceeds the limit of " +
                    std::to_string(kExhaustiveLimit));
  }
  // Lexicographically largest mask first; prev_permutation walks all subsets.
  std::vector<bool> chosen(n, false);
  std::fill_n(chosen.begin(), m1, true);
  Signs signs(n);
  std::uint64_t exceed = 0;
  std::uint64_t visited = 0;
  do {
    for (std::size_t i = 0; i < n; ++i) signs[i] = chosen[i] ? Sign{1} : Sign{-1};
    if (ties_or_exceeds(statistic(signs), observed)) ++exceed;
    ++visited;
  } while (std::prev_permutation(chosen.begin(), chosen.end()));
  return static_cast<double>(exceed) / static_cast<double>(visited);
}

McEstimate mc_sync_pvalue(const Eigen::MatrixXd& x, std::size_t n_perms, std::uint64_t seed,
                          std::size_t threads) {
  const auto rows = static_cast<std::size_t>(x.rows());
  if (rows == 0 || rows % 2 != 0) {
    throw DomainError("synchronized matrix needs an even, positive number of rows");
  }
  const StatisticFn statistic = [&x](std::span<const Sign> signs) {
    Eigen::VectorXd eps(static_cast<Eigen::Index>(signs.size()));
    for (std::size_t i = 0; i < signs.size(); ++i) eps[static_cast<Eigen::Index>(i)] = signs[i];
    return (x.transpose() * eps).norm();
  };
  const double observed = statistic(canonical_signs(rows / 2, rows / 2));
  return mc_pvalue(statistic, observed, rows, rows / 2, n_perms, seed, threads);
}

}  // namespace aperm
