#pragma once

// Reference implementations used only by the tests. Each one takes a
// different numerical route from the library code it checks.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace aperm::oracle {

/// I(u; a, b) by Gauss-Kronrod quadrature of the beta density after the
/// substitution t = s^k, which smooths the endpoint behaviour.
[[nodiscard]] double inc_beta_quadrature(double u, double a, double b);

/// ln Gamma(x) from the Stirling series after upward recurrence to x >= 30.
[[nodiscard]] double lgamma_stirling(double x);

/// Singular values from the eigenvalues of A^T A (or A A^T), descending.
[[nodiscard]] Eigen::VectorXd singular_values_gram(const Eigen::MatrixXd& a);

/// (sum nu^q)^{1/q} from singular_values_gram; max when q is infinite.
[[nodiscard]] double schatten_gram(const Eigen::MatrixXd& a, double q);

/// |mean(first m1) - mean(rest)| / sd(all), sd with the n-1 divisor.
[[nodiscard]] double univariate_t(std::span<const double> values, std::size_t m1);

/// Exact permutation p-value of univariate_t by enumerating all m1-subsets.
[[nodiscard]] double brute_force_pvalue(std::span<const double> values, std::size_t m1);

/// Symmetric d x d matrix with N(0,1) entries (seeded).
[[nodiscard]] Eigen::MatrixXd random_symmetric(Eigen::Index d, unsigned seed);

/// B^T B / d for a random d x d B.
[[nodiscard]] Eigen::MatrixXd random_psd(Eigen::Index d, unsigned seed);

}  // namespace aperm::oracle
