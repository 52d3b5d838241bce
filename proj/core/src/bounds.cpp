#include "aperm/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aperm/errors.hpp"

namespace aperm {

namespace {

Eigen::VectorXd to_vector(std::span<const Sign> signs) {
  Eigen::VectorXd eps(static_cast<Eigen::Index>(signs.size()));
  for (std::size_t i = 0; i < signs.size(); ++i) {
    eps[static_cast<Eigen::Index>(i)] = static_cast<double>(signs[i]);
  }
  return eps;
}

// exp(-t^2 / denom) clamped to (0, 1], with the degenerate denom = 0 case.
double gaussian_tail(double t, double denom) {
  if (t <= 0.0) return 1.0;
  if (denom <= 0.0) {
    throw DegenerateDataError("bound scale is zero for a non-zero statistic");
  }
  return std::min(1.0, std::exp(-(t * t) / denom));
}

}  // namespace

SampleSplit::SampleSplit(std::size_t m1, std::size_t m2) : m1_(m1), m2_(m2) {
  if (m1 == 0 || m2 == 0) throw DomainError("both groups need at least one observation");
}

double SampleSplit::kappa() const noexcept {
  return static_cast<double>(larger()) / static_cast<double>(smaller());
}

std::size_t SampleSplit::ceil_kappa_plus_one() const noexcept {
  return (n() + smaller() - 1) / smaller();
}

void BoundConfig::validate() const {
  for (const double c : {c_commutative, c_noncommutative, c_sync}) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw DomainError("bound constants must be finite and positive");
    }
  }
}

// ---------------------------------------------------------------------------

UnivariateStatistic::UnivariateStatistic(std::span<const double> values)
    : values_(values.begin(), values.end()), sd_(0.0) {
  const auto n = values_.size();
  if (n < 2) throw DomainError("univariate statistic needs at least two values");
  for (const double v : values_) {
    if (!std::isfinite(v)) throw DomainError("values must be finite");
  }
  const double mean = std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : values_) ss += (v - mean) * (v - mean);
  sd_ = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd_ > 0.0)) {
    throw DegenerateDataError("all observations are equal; the pooled standard deviation is zero");
  }
}

double UnivariateStatistic::evaluate(std::span<const Sign> assignment) const {
  if (assignment.size() != values_.size()) {
    throw DomainError("assignment length does not match the number of values");
  }
  double sum_pos = 0.0;
  double sum_neg = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (assignment[i] > 0) {
      sum_pos += values_[i];
      ++n_pos;
    } else {
      sum_neg += values_[i];
    }
  }
  const std::size_t n_neg = values_.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DomainError("assignment leaves a group empty");
  return std::fabs(sum_pos / static_cast<double>(n_pos) - sum_neg / static_cast<double>(n_neg)) /
         sd_;
}

TestStatistic univariate_statistic(std::span<const double> values, const SampleSplit& split) {
  if (values.size() != split.n()) {
    throw DomainError("number of values does not match the sample split");
  }
  const UnivariateStatistic stat(values);
  return TestStatistic{stat.evaluate(canonical_signs(split.m1(), split.m2())), stat.pooled_sd(),
                       StatisticKind::univariate};
}

double univariate_tail_bound(const TestStatistic& stat, const SampleSplit& split) {
  if (stat.kind != StatisticKind::univariate) {
    throw DomainError("univariate bound applied to a non-univariate statistic");
  }
  const auto c = static_cast<double>(split.ceil_kappa_plus_one());
  return gaussian_tail(stat.value, 2.0 * c * c * c / static_cast<double>(split.n()));
}

// ---------------------------------------------------------------------------

BanachSum::BanachSum(const BanachItems& items, const NormSpec& spec) : spec_(spec) {
  std::visit(
      [this](const auto& list) {
        using T = typename std::decay_t<decltype(list)>::value_type;
        n_ = list.size();
        if (n_ < 2) throw DomainError("Banach statistic needs at least two items");
        if constexpr (std::is_same_v<T, Eigen::VectorXd>) {
          if (spec_.space() != NormSpec::Space::sequence) {
            throw DomainError("vector items need a sequence (l^q) norm");
          }
          const Eigen::Index d = list.front().size();
          data_.resize(d, static_cast<Eigen::Index>(n_));
          for (std::size_t i = 0; i < n_; ++i) {
            if (list[i].size() != d) throw DomainError("vector items differ in dimension");
            data_.col(static_cast<Eigen::Index>(i)) = list[i];
          }
          weights_ = Eigen::VectorXd::Ones(d);
        } else if constexpr (std::is_same_v<T, GridCurve>) {
          if (spec_.space() != NormSpec::Space::function) {
            throw DomainError("curve items need a function (L^q) norm");
          }
          const Eigen::VectorXd& grid = list.front().grid();
          data_.resize(grid.size(), static_cast<Eigen::Index>(n_));
          for (std::size_t i = 0; i < n_; ++i) {
            if (list[i].grid().size() != grid.size() || list[i].grid() != grid) {
              throw DomainError("curves are not observed on a shared grid");
            }
            data_.col(static_cast<Eigen::Index>(i)) = list[i].values();
          }
          if (grid.size() < 2 && !spec_.is_infinite()) {
            throw DomainError("finite-q L^q norms need at least 2 grid points");
          }
          weights_ = grid.size() < 2 ? Eigen::VectorXd::Ones(grid.size()) : trapezoid_weights(grid);
          weighted_ = true;
        } else {
          if (spec_.space() != NormSpec::Space::schatten) {
            throw DomainError("operator items need a Schatten norm");
          }
          const Eigen::Index d = list.front().dim();
          Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
          for (const auto& op : list) {
            if (op.dim() != d) throw DomainError("operator items differ in dimension");
            mean += op.matrix();
          }
          mean /= static_cast<double>(n_);
          operators_.reserve(n_);
          for (const auto& op : list) operators_.push_back(op.matrix() - mean);
        }
      },
      items);
  if (!operators_.empty()) return;
  if (!data_.allFinite()) throw DomainError("items have non-finite entries");
  const Eigen::VectorXd mean = data_.rowwise().mean();
  data_.colwise() -= mean;
}

double BanachSum::evaluate(std::span<const Sign> signs) const {
  if (signs.size() != n_) throw DomainError("sign vector length does not match the items");
  if (!operators_.empty()) {
    const Eigen::Index d = operators_.front().rows();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < n_; ++i) {
      if (signs[i] > 0) {
        sum += operators_[i];
      } else {
        sum -= operators_[i];
      }
    }
    return schatten_norm_symmetric(sum, spec_);
  }
  const Eigen::VectorXd v = data_ * to_vector(signs);
  return weighted_lq_norm(v, weights_, spec_.q());
}

double BanachSum::scale() const {
  const NormSpec schatten(NormSpec::Space::schatten, spec_.q());
  if (!operators_.empty()) {
    if (spec_.q() == 2.0) {
      // ||(sum X^2)^{1/2}||_{S^2}^2 = tr(sum X^2) = sum ||X||_F^2
      double total = 0.0;
      for (const auto& x : operators_) total += x.squaredNorm();
      return std::sqrt(total);
    }
    const Eigen::Index d = operators_.front().rows();
    Eigen::MatrixXd square_sum = Eigen::MatrixXd::Zero(d, d);
    for (const auto& x : operators_) square_sum.noalias() += x * x;
    return sqrt_schatten_norm(0.5 * (square_sum + square_sum.transpose()), schatten);
  }
  // Singular values of W^{1/2} Y are the square roots of the eigenvalues of
  // the discretized operator (n-1) Sigma_hat.
  const Eigen::MatrixXd y = weights_.cwiseSqrt().asDiagonal() * data_;
  if (spec_.q() == 2.0) return y.norm();
  return lq_vector_norm(singular_values(y), spec_.q());
}

TestStatistic banach_statistic(const BanachItems& items, std::span<const Sign> labels,
                               const NormSpec& spec) {
  const BanachSum sum(items, spec);
  if (labels.size() != sum.size()) {
    throw DomainError("label vector length does not match the items");
  }
  for (const Sign s : labels) {
    if (s != 1 && s != -1) throw DomainError("labels must be +1 or -1");
  }
  if (!is_zero_sum(labels)) {
    throw UnsupportedDesignError(
        "Banach-space bounds are available for balanced samples only (m1 = m2)");
  }
  return TestStatistic{sum.evaluate(labels), sum.scale(), StatisticKind::banach_sum};
}

double commutative_tail_bound(const TestStatistic& stat, const BoundConfig& cfg) {
  if (stat.kind != StatisticKind::banach_sum) {
    throw DomainError("commutative bound applied to a non-Banach statistic");
  }
  return gaussian_tail(stat.value, cfg.c_commutative * stat.scale * stat.scale);
}

double noncommutative_tail_bound(const TestStatistic& stat, const BoundConfig& cfg) {
  if (stat.kind != StatisticKind::banach_sum) {
    throw DomainError("non-commutative bound applied to a non-Banach statistic");
  }
  return gaussian_tail(stat.value, cfg.c_noncommutative * stat.scale * stat.scale);
}

// ---------------------------------------------------------------------------

std::vector<std::pair<std::size_t, std::size_t>> level_pairs(std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(k * (k > 0 ? k - 1 : 0) / 2);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) out.emplace_back(i, j);
  }
  return out;
}

Eigen::MatrixXd build_sync_matrix(std::span<const std::vector<double>> samples) {
  const std::size_t k = samples.size();
  if (k < 2) throw DomainError("synchronized test needs at least two samples");
  const std::size_t m = samples.front().size();
  if (m == 0) throw DomainError("samples must be non-empty");
  for (const auto& s : samples) {
    if (s.size() != m) {
      throw UnsupportedDesignError("synchronized permutation needs balanced samples");
    }
  }
  const auto pairs = level_pairs(k);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(2 * m), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    const auto [i, j] = pairs[c];
    for (std::size_t r = 0; r < m; ++r) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = samples[i][r];
      x(static_cast<Eigen::Index>(m + r), static_cast<Eigen::Index>(c)) = samples[j][r];
    }
  }
  return x;
}

Eigen::MatrixXd center_columns(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  out.rowwise() -= x.colwise().mean();
  return out;
}

TestStatistic sync_statistic(const Eigen::MatrixXd& x, std::span<const Sign> signs) {
  if (signs.size() != static_cast<std::size_t>(x.rows())) {
    throw DomainError("sign vector length does not match the synchronized matrix");
  }
  if (!is_zero_sum(signs)) throw DomainError("synchronized signs must sum to zero");
  const double value = (x.transpose() * to_vector(signs)).norm();
  // ||X X^T||_F = ||X^T X||_F; use the smaller Gram matrix.
  const double scale =
      x.rows() <= x.cols() ? (x * x.transpose()).norm() : (x.transpose() * x).norm();
  return TestStatistic{value, scale, StatisticKind::sync_global};
}

double sync_tail_bound(const TestStatistic& stat, const BoundConfig& cfg) {
  if (stat.kind != StatisticKind::sync_global) {
    throw DomainError("synchronized bound applied to a non-synchronized statistic");
  }
  return gaussian_tail(stat.value, cfg.c_sync * stat.scale);
}

double global_statistic(std::span<const double> pairwise, std::span<const std::size_t> sizes) {
  const std::size_t k = sizes.size();
  const auto pairs = level_pairs(k);
  if (k < 2 || pairwise.size() != pairs.size()) {
    throw DomainError("global statistic needs all C(k,2) pairwise statistics");
  }
  double total = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    total += static_cast<double>(sizes[i]) * static_cast<double>(sizes[j]) * pairwise[p] *
             pairwise[p];
  }
  return total;
}

}  // namespace aperm
