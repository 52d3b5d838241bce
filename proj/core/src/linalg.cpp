#include "aperm/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "aperm/errors.hpp"

namespace aperm {

namespace {

std::atomic<std::uint64_t> g_decompositions{0};

constexpr double kSymmetryTol = 1e-10;
constexpr double kPsdTol = 1e-8;

void count_decomposition() noexcept { g_decompositions.fetch_add(1, std::memory_order_relaxed); }

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// (sum v_i^q)^{1/q} for non-negative v, scaled by the maximum to avoid
// overflow for large q.
double power_mean_norm(const Eigen::Ref<const Eigen::VectorXd>& v, double q) {
  if (v.size() == 0) return 0.0;
  const double top = v.maxCoeff();
  if (top <= 0.0) return 0.0;
  if (std::isinf(q)) return top;
  if (q == 1.0) return v.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(v[i] / top, q);
  return top * std::pow(acc, 1.0 / q);
}

void require_schatten(const NormSpec& spec) {
  if (spec.space() != NormSpec::Space::schatten) {
    throw DomainError("a Schatten norm was requested with a non-Schatten NormSpec");
  }
}

// Eigenvalues of a symmetric matrix, descending.
Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a) {
  if (!all_finite(a)) throw DomainError("matrix has non-finite entries");
  count_decomposition();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigendecomposition did not converge");
  }
  return solver.eigenvalues().reverse();
}

// Clamps small negative eigenvalues of a PSD matrix; rejects real indefiniteness.
void clamp_psd(Eigen::VectorXd& values) {
  if (values.size() == 0) return;
  const double magnitude = values.cwiseAbs().maxCoeff();
  const double smallest = values.minCoeff();
  if (smallest < -kPsdTol * magnitude) {
    throw DomainError("operator is not positive semi-definite (smallest eigenvalue " +
                      std::to_string(smallest) + ", largest " +
                      std::to_string(values.maxCoeff()) + ")");
  }
  values = values.cwiseMax(0.0);
}

}  // namespace

NormSpec::NormSpec(Space space, double q) : space_(space), q_(q) {
  if (std::isnan(q) || q < 1.0) {
    throw DomainError("norm exponent q must satisfy q >= 1 (got " + std::to_string(q) + ")");
  }
}

SymOperator::SymOperator(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw DomainError("operator must be a non-empty square matrix");
  }
  if (!all_finite(entries_)) throw DomainError("operator has non-finite entries");
  const double asym = (entries_ - entries_.transpose()).norm();
  if (asym > kSymmetryTol * std::max(1.0, entries_.norm())) {
    throw DomainError("operator is not symmetric (||A - A^T|| = " + std::to_string(asym) + ")");
  }
  entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
}

SymOperator SymOperator::identity(Eigen::Index d) {
  return SymOperator(Eigen::MatrixXd::Identity(d, d));
}

GridCurve::GridCurve(Eigen::VectorXd grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.size() != values_.size()) {
    throw DomainError("curve grid and values differ in length");
  }
  if (grid_.size() == 0) throw DomainError("curve has no grid points");
  if (!grid_.allFinite() || !values_.allFinite()) {
    throw DomainError("curve has non-finite grid points or values");
  }
  for (Eigen::Index i = 1; i < grid_.size(); ++i) {
    if (!(grid_[i] > grid_[i - 1])) throw DomainError("curve grid must be strictly increasing");
  }
}

std::uint64_t decomposition_count() noexcept {
  return g_decompositions.load(std::memory_order_relaxed);
}

void reset_decomposition_count() noexcept { g_decompositions.store(0); }

SymEigen sym_eig(const SymOperator& a) {
  count_decomposition();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric eigendecomposition did not converge");
  }
  // Eigen returns ascending order.
  return SymEigen{solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse()};
}

SymOperator matrix_sqrt(const SymOperator& a) {
  auto [values, vectors] = sym_eig(a);
  clamp_psd(values);
  Eigen::MatrixXd root = vectors * values.cwiseSqrt().asDiagonal() * vectors.transpose();
  return SymOperator(0.5 * (root + root.transpose()));
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
  if (!all_finite(a)) throw DomainError("matrix has non-finite entries");
  if (a.size() == 0) return Eigen::VectorXd();
  count_decomposition();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
  return svd.singularValues();
}

double schatten_norm(const Eigen::MatrixXd& a, const NormSpec& spec) {
  require_schatten(spec);
  return power_mean_norm(singular_values(a), spec.q());
}

double schatten_norm_symmetric(const Eigen::MatrixXd& a, const NormSpec& spec) {
  require_schatten(spec);
  if (a.rows() != a.cols()) throw DomainError("symmetric Schatten norm needs a square matrix");
  if (spec.q() == 2.0) return a.norm();
  return power_mean_norm(sym_eigenvalues(a).cwiseAbs(), spec.q());
}

double weighted_lq_norm(const Eigen::Ref<const Eigen::VectorXd>& v,
                        const Eigen::Ref<const Eigen::VectorXd>& weights, double q) {
  if (v.size() == 0) return 0.0;
  if (std::isinf(q)) return v.cwiseAbs().maxCoeff();
  if (q == 1.0) return v.cwiseAbs().dot(weights);
  if (q == 2.0) return std::sqrt(v.cwiseAbs2().dot(weights));
  const double top = v.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += weights[i] * std::pow(std::fabs(v[i]) / top, q);
  return top * std::pow(acc, 1.0 / q);
}

double lq_vector_norm(const Eigen::Ref<const Eigen::VectorXd>& v, double q) {
  return weighted_lq_norm(v, Eigen::VectorXd::Ones(v.size()), q);
}

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
  const Eigen::Index g = grid.size();
  if (g < 2) throw DomainError("trapezoidal quadrature needs at least 2 grid points");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(g);
  for (Eigen::Index i = 0; i + 1 < g; ++i) {
    const double h = 0.5 * (grid[i + 1] - grid[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

double lq_curve_norm(const GridCurve& c, const NormSpec& spec) {
  if (spec.space() != NormSpec::Space::function) {
    throw DomainError("lq_curve_norm needs a function-space NormSpec");
  }
  if (spec.is_infinite()) return c.values().cwiseAbs().maxCoeff();
  return weighted_lq_norm(c.values(), trapezoid_weights(c.grid()), spec.q());
}

SymOperator empirical_covariance(const Eigen::MatrixXd& items, bool center) {
  const Eigen::Index n = items.cols();
  if (n < 2) throw DomainError("empirical covariance needs at least 2 items");
  if (!all_finite(items)) throw DomainError("items have non-finite entries");
  Eigen::MatrixXd y = items;
  if (center) y.colwise() -= items.rowwise().mean();
  Eigen::MatrixXd cov = (y * y.transpose()) / static_cast<double>(n - 1);
  return SymOperator(0.5 * (cov + cov.transpose()));
}

SymOperator empirical_covariance(std::span<const Eigen::VectorXd> items, bool center) {
  if (items.size() < 2) throw DomainError("empirical covariance needs at least 2 items");
  const Eigen::Index d = items.front().size();
  Eigen::MatrixXd m(d, static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].size() != d) throw DomainError("items differ in dimension");
    m.col(static_cast<Eigen::Index>(i)) = items[i];
  }
  return empirical_covariance(m, center);
}

SymOperator empirical_covariance(std::span<const GridCurve> items, bool center) {
  if (items.size() < 2) throw DomainError("empirical covariance needs at least 2 items");
  const Eigen::VectorXd& grid = items.front().grid();
  Eigen::MatrixXd m(grid.size(), static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].grid().size() != grid.size() || items[i].grid() != grid) {
      throw DomainError("curves are not observed on a shared grid");
    }
    m.col(static_cast<Eigen::Index>(i)) = items[i].values();
  }
  return empirical_covariance(m, center);
}

double sqrt_schatten_norm(const Eigen::MatrixXd& psd, const NormSpec& spec) {
  require_schatten(spec);
  Eigen::VectorXd values = sym_eigenvalues(psd);
  clamp_psd(values);
  return power_mean_norm(values.cwiseSqrt(), spec.q());
}

double noncomm_scale(std::span<const Eigen::MatrixXd> items, const NormSpec& spec) {
  require_schatten(spec);
  if (items.empty()) throw DomainError("noncomm_scale needs at least one item");
  const Eigen::Index rows = items.front().rows();
  const Eigen::Index cols = items.front().cols();
  bool symmetric = rows == cols;
  for (const auto& x : items) {
    if (x.rows() != rows || x.cols() != cols) throw DomainError("items differ in shape");
    if (!all_finite(x)) throw DomainError("items have non-finite entries");
    if (symmetric && (x - x.transpose()).norm() > 1e-12 * std::max(1.0, x.norm())) {
      symmetric = false;
    }
  }
  if (symmetric) {
    Eigen::MatrixXd square_sum = Eigen::MatrixXd::Zero(rows, rows);
    for (const auto& x : items) square_sum.noalias() += x * x;
    return sqrt_schatten_norm(0.5 * (square_sum + square_sum.transpose()), spec);
  }
  Eigen::MatrixXd left = Eigen::MatrixXd::Zero(rows, rows);
  Eigen::MatrixXd right = Eigen::MatrixXd::Zero(cols, cols);
  for (const auto& x : items) {
    left.noalias() += x * x.transpose();
    right.noalias() += x.transpose() * x;
  }
  return std::max(sqrt_schatten_norm(left, spec), sqrt_schatten_norm(right, spec));
}

ProcrustesAlignment procrustes_align(const SymOperator& sigma_a, const SymOperator& sigma_b) {
  if (sigma_a.dim() != sigma_b.dim()) {
    throw DomainError("Procrustes alignment needs operators of equal dimension");
  }
  ProcrustesAlignment out;
  out.sqrt_a = matrix_sqrt(sigma_a).matrix();
  const Eigen::MatrixXd sqrt_b = matrix_sqrt(sigma_b).matrix();
  count_decomposition();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sqrt_b.transpose() * out.sqrt_a,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  out.delta = sqrt_b * out.rotation - out.sqrt_a;
  return out;
}

Eigen::MatrixXd procrustes_delta(const SymOperator& sigma_a, const SymOperator& sigma_b) {
  return procrustes_align(sigma_a, sigma_b).delta;
}

SymOperator covariance_path(const ProcrustesAlignment& alignment, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw DomainError("covariance path parameter gamma must be finite and >= 0");
  }
  const Eigen::MatrixXd factor = alignment.sqrt_a + gamma * alignment.delta;
  Eigen::MatrixXd sigma = factor * factor.transpose();
  return SymOperator(0.5 * (sigma + sigma.transpose()));
}

SymOperator covariance_path(const SymOperator& sigma_a, const SymOperator& sigma_b,
                            double gamma) {
  return covariance_path(procrustes_align(sigma_a, sigma_b), gamma);
}

}  // namespace aperm
