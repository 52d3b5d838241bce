#include "aperm/specfun.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "aperm/errors.hpp"

namespace aperm {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate_data: return "degenerate-data";
    case ErrorKind::unsupported_design: return "unsupported-design";
    case ErrorKind::calibration_failure: return "calibration-failure";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::size: return "size";
  }
  return "unknown";
}

BetaParams::BetaParams(double alpha, double beta, std::optional<double> c0)
    : alpha_(alpha), beta_(beta), c0_(c0) {
  if (!(alpha > 0.0) || !std::isfinite(alpha) || !(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("beta shape parameters must be finite and positive (alpha=" +
                      std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  }
  if (c0 && (!(*c0 > 0.0) || !std::isfinite(*c0))) {
    throw DomainError("leading coefficient c0 must be finite and positive");
  }
}

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_gamma requires a finite positive argument");
  }
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

namespace {

constexpr int kMaxIterations = 20000;
constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;

// Continued fraction for I(x; a, b) * a / prefactor, modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge (a=" +
                     std::to_string(a) + ", b=" + std::to_string(b) +
                     ", x=" + std::to_string(x) + ")");
}

// x^a (1-x)^b / (a B(a,b)) without the 1/a factor.
double beta_prefactor(double a, double b, double x) {
  const double log_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  return std::exp(log_front);
}

}  // namespace

double reg_inc_beta(double u, const BetaParams& params) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw DomainError("reg_inc_beta argument must lie in [0, 1]");
  }
  const double a = params.alpha();
  const double b = params.beta();
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;

  double result;
  if (u <= a / (a + b)) {
    result = beta_prefactor(a, b, u) * beta_continued_fraction(a, b, u) / a;
  } else {
    result = 1.0 - beta_prefactor(b, a, 1.0 - u) * beta_continued_fraction(b, a, 1.0 - u) / b;
  }
  if (result < 0.0) return 0.0;
  if (result > 1.0) return 1.0;
  return result;
}

}  // namespace aperm
