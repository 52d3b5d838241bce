#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace aperm {

/// Which norm drives a statistic. q = +infinity is the sup / operator norm.
class NormSpec {
 public:
  enum class Space { sequence, function, schatten };

  static constexpr double infinity = std::numeric_limits<double>::infinity();

  NormSpec(Space space, double q);

  [[nodiscard]] Space space() const noexcept { return space_; }
  [[nodiscard]] double q() const noexcept { return q_; }
  [[nodiscard]] bool is_infinite() const noexcept { return q_ == infinity; }

  friend bool operator==(const NormSpec&, const NormSpec&) = default;

 private:
  Space space_;
  double q_;
};

/// Symmetric real operator on a d-point discretization.
class SymOperator {
 public:
  /// Validates symmetry to 1e-10 relative and symmetrizes the stored copy.
  explicit SymOperator(Eigen::MatrixXd entries);

  [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return entries_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return entries_.rows(); }

  static SymOperator identity(Eigen::Index d);

 private:
  Eigen::MatrixXd entries_;
};

/// A curve observed on a strictly increasing grid.
class GridCurve {
 public:
  GridCurve(Eigen::VectorXd grid, Eigen::VectorXd values);

  [[nodiscard]] const Eigen::VectorXd& grid() const noexcept { return grid_; }
  [[nodiscard]] const Eigen::VectorXd& values() const noexcept { return values_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return values_.size(); }

 private:
  Eigen::VectorXd grid_;
  Eigen::VectorXd values_;
};

struct SymEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // orthonormal columns, matching order
};

// Every symmetric eigendecomposition or SVD performed by this module bumps a
// process-wide counter. The benchmark harness reports it.
[[nodiscard]] std::uint64_t decomposition_count() noexcept;
void reset_decomposition_count() noexcept;

[[nodiscard]] SymEigen sym_eig(const SymOperator& a);

/// Principal square root of a PSD operator. Eigenvalues in
/// [-1e-8 * lambda_max, 0) are clamped to zero; anything more negative is
/// rejected.
[[nodiscard]] SymOperator matrix_sqrt(const SymOperator& a);

/// Singular values, descending.
[[nodiscard]] Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);

/// q-Schatten norm of an arbitrary matrix (spec.space must be schatten).
[[nodiscard]] double schatten_norm(const Eigen::MatrixXd& a, const NormSpec& spec);

/// Schatten norm of a symmetric matrix via its eigenvalues (one decomposition;
/// none for q = 2, which is the Frobenius norm).
[[nodiscard]] double schatten_norm_symmetric(const Eigen::MatrixXd& a, const NormSpec& spec);

/// l^q norm of a sequence with weights w_i: (sum w_i |v_i|^q)^{1/q}, or
/// max |v_i| for q = infinity (weights ignored).
[[nodiscard]] double weighted_lq_norm(const Eigen::Ref<const Eigen::VectorXd>& v,
                                      const Eigen::Ref<const Eigen::VectorXd>& weights,
                                      double q);

[[nodiscard]] double lq_vector_norm(const Eigen::Ref<const Eigen::VectorXd>& v, double q);

/// Composite trapezoid weights for a strictly increasing grid.
[[nodiscard]] Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid);

/// L^q norm by trapezoidal quadrature on the curve's own grid; the max over
/// grid points when q is infinite.
[[nodiscard]] double lq_curve_norm(const GridCurve& c, const NormSpec& spec);

/// (n-1)^{-1} sum x_i x_i^T over the columns of `items` (d x n), optionally
/// after subtracting the column mean.
[[nodiscard]] SymOperator empirical_covariance(const Eigen::MatrixXd& items, bool center);
[[nodiscard]] SymOperator empirical_covariance(std::span<const Eigen::VectorXd> items, bool center);
[[nodiscard]] SymOperator empirical_covariance(std::span<const GridCurve> items, bool center);

/// max{ ||(sum X X^*)^{1/2}||_{S^q}, ||(sum X^* X)^{1/2}||_{S^q} }. For
/// all-symmetric input the two branches coincide and only one is computed.
[[nodiscard]] double noncomm_scale(std::span<const Eigen::MatrixXd> items, const NormSpec& spec);

/// Schatten-q norm of (P)^{1/2} for a PSD matrix P, from one decomposition.
[[nodiscard]] double sqrt_schatten_norm(const Eigen::MatrixXd& psd, const NormSpec& spec);

/// Delta = sigma_b^{1/2} R - sigma_a^{1/2}, with R = U V^T the orthogonal
/// factor aligning the two square roots.
struct ProcrustesAlignment {
  Eigen::MatrixXd sqrt_a;
  Eigen::MatrixXd rotation;
  Eigen::MatrixXd delta;
};

[[nodiscard]] ProcrustesAlignment procrustes_align(const SymOperator& sigma_a,
                                                   const SymOperator& sigma_b);
[[nodiscard]] Eigen::MatrixXd procrustes_delta(const SymOperator& sigma_a,
                                               const SymOperator& sigma_b);

/// [sigma_a^{1/2} + gamma Delta][sigma_a^{1/2} + gamma Delta]^T.
[[nodiscard]] SymOperator covariance_path(const SymOperator& sigma_a,
                                          const SymOperator& sigma_b, double gamma);
[[nodiscard]] SymOperator covariance_path(const ProcrustesAlignment& alignment, double gamma);

}  // namespace aperm
