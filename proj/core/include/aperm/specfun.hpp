#pragma once

#include <optional>

namespace aperm {

/// Shape parameters of a Beta(alpha, beta) law, plus the optional leading
/// coefficient used by the closed-form univariate adjustment.
class BetaParams {
 public:
  BetaParams(double alpha, double beta, std::optional<double> c0 = std::nullopt);

  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] std::optional<double> c0() const noexcept { return c0_; }

 private:
  double alpha_;
  double beta_;
  std::optional<double> c0_;
};

/// ln Gamma(x) for x > 0.
[[nodiscard]] double log_gamma(double x);

/// Regularized incomplete beta function I(u; alpha, beta), u in [0, 1].
///
/// Evaluated with the modified Lentz continued fraction, switching to the
/// complement I(1-u; beta, alpha) when u lies past the mean alpha/(alpha+beta)
/// so the fraction always converges quickly.
[[nodiscard]] double reg_inc_beta(double u, const BetaParams& params);

}  // namespace aperm
