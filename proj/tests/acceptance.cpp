// Acceptance driver: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is non-zero when any criterion fails.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "aperm/betacal.hpp"
#include "aperm/bounds.hpp"
#include "aperm/linalg.hpp"
#include "aperm/mc_oracle.hpp"
#include "aperm/rng.hpp"
#include "aperm/specfun.hpp"
#include "scenarios.hpp"
#include "support/oracles.hpp"

using namespace aperm;

namespace {

// Pinned tolerances and limits.
constexpr std::size_t kC1Datasets = 500;
constexpr double kC1Seconds = 60.0;

constexpr double kC2MaxLog2Gap = 1.0;
constexpr double kC2MaxMu = 0.6;
constexpr double kC2Seconds = 300.0;

constexpr double kC3MaxLog2Ratio = 1.0;
constexpr double kC3Seconds = 600.0;

constexpr std::size_t kC4Reps = 100;
constexpr double kC4Level = 0.01;
constexpr double kC4Seconds = 900.0;

constexpr double kC5MaxSpearman = -0.9;
constexpr double kC5MaxFactor = 4.0;
constexpr double kC5Seconds = 1200.0;

constexpr std::size_t kC6Instances = 200;
constexpr std::size_t kC6Perms = 2000;
constexpr double kC6MinWithin = 0.99;
constexpr double kC6IncBetaTol = 1e-10;
constexpr double kC6LogGammaTol = 1e-12;
constexpr double kC6SchattenTol = 1e-8;
constexpr double kC6PathTol = 1e-8;
constexpr double kC6Seconds = 120.0;

constexpr double kC7Tol = 1e-9;

constexpr std::uint64_t kC8MaxAnalyticDecompositions = 300;
constexpr std::uint64_t kC8PerPermDecompositions = 264;
constexpr double kC8MinSpeedup = 100.0;
constexpr double kC8Seconds = 600.0;

// A grid point is at the Monte-Carlo floor once mean log2 p is within one
// exceedance of the add-one minimum 1/(N+1).
double floor_log2(std::size_t perms) { return std::log2(2.0 / static_cast<double>(perms + 1)); }

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto n = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) g.push_back(lo + step * i);
  return g;
}

int failures = 0;

void report(int id, bool pass, double seconds, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %d: %s (%.1f s) %s\n", id, pass ? "PASS" : "FAIL", seconds, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// --------------------------------------------------------------------------

void criterion1(std::uint64_t seed) {
  const Stopwatch sw;
  struct Split {
    std::size_t m1, m2;
  };
  const std::vector<Split> splits{{4, 4}, {5, 5}, {6, 6}, {8, 4}};
  std::size_t held = 0;
  double min_margin = 1.0;
  std::string violations;
  for (std::size_t i = 0; i < kC1Datasets; ++i) {
    const Split s = splits[i % splits.size()];
    auto rng = substream(seed, Stream::data, i);
    std::normal_distribution<double> z;
    std::student_t_distribution<double> heavy(2.0);
    const double shift = 0.5 * static_cast<double>(i % 7);
    std::vector<double> v(s.m1 + s.m2);
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double e = i % 2 == 0 ? z(rng) : heavy(rng);
      v[j] = e + (j < s.m1 ? shift : 0.0);
    }
    const SampleSplit split(s.m1, s.m2);
    const double bound = univariate_tail_bound(univariate_statistic(v, split), split);
    const UnivariateStatistic stat(v);
    const double t = stat.evaluate(canonical_signs(s.m1, s.m2));
    const double exact = exhaustive_pvalue(
        [&stat](std::span<const Sign> a) { return stat.evaluate(a); }, t, v.size(), s.m1);
    if (bound >= exact) {
      ++held;
    } else {
      char buf[160];
      std::snprintf(buf, sizeof buf, "\n    dataset %zu split %zu/%zu t=%.4f bound=%.6f exact=%.6f", i, s.m1, s.m2, t,
                    bound, exact);
      violations += buf;
    }
    min_margin = std::min(min_margin, bound - exact);
  }
  const double secs = sw.seconds();
  const bool pass = held == kC1Datasets && secs < kC1Seconds;
  report(1, pass, secs,
         "bound >= exact p in " + std::to_string(held) + "/" + std::to_string(kC1Datasets) +
             " datasets (splits 4/4, 5/5, 6/6, 8/4); min margin " + fmt("%.3g", min_margin) + violations);
}

// --------------------------------------------------------------------------

void criterion2(std::uint64_t seed) {
  const Stopwatch sw;
  sim::UniTwoSampleConfig cfg;
  cfg.mu = grid(0.0, 1.0, 0.1);
  cfg.seed = seed;
  const auto reps = sim::run_uni_two_sample(cfg);
  const auto rows = sim::summarize(reps);
  bool ordered = true;
  bool tracks = true;
  std::string detail;
  for (const auto& r : rows) {
    const bool ord = r.mean_log2_raw >= r.mean_log2_mc;
    ordered = ordered && ord;
    double per_rep = 0.0;
    std::size_t count = 0;
    for (const auto& x : reps) {
      if (std::fabs(x.x - r.x) > 1e-12) continue;
      per_rep += std::fabs(std::log2(x.p_adjusted) - std::log2(x.p_classical));
      ++count;
    }
    per_rep /= static_cast<double>(count);
    const double gap = std::fabs(r.mean_log2_adjusted - r.mean_log2_classical);
    if (r.x <= kC2MaxMu + 1e-12 && gap > kC2MaxLog2Gap) tracks = false;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "\n    mu=%.1f log2 raw=%.2f mc=%.2f%s adj=%.2f t=%.2f |gap|=%.2f per-rep=%.2f%s", r.x,
                  r.mean_log2_raw, r.mean_log2_mc, r.mean_log2_mc <= floor_log2(cfg.mc_perms) ? "(floor)" : "",
                  r.mean_log2_adjusted, r.mean_log2_classical, gap, per_rep, ord ? "" : " raw<mc");
    detail += buf;
  }
  const double secs = sw.seconds();
  const bool pass = ordered && tracks && secs < kC2Seconds;
  report(2, pass, secs,
         std::string("raw >= mc at every mu: ") + (ordered ? "yes" : "no") +
             "; |mean log2 adj - mean log2 t| <= 1 for mu <= 0.6: " + (tracks ? "yes" : "no") + detail);
}

// --------------------------------------------------------------------------

void criterion3(std::uint64_t seed) {
  const Stopwatch sw;
  sim::UniKSampleConfig cfg;
  cfg.shift = grid(0.0, 2.0, 0.2);
  cfg.seed = seed;
  const auto rows = sim::summarize(sim::run_uni_ksample(cfg));
  const double floor = floor_log2(cfg.mc_perms);
  bool agree = true;
  bool at_floor = false;
  std::string detail;
  for (const auto& r : rows) {
    at_floor = at_floor || r.mean_log2_mc <= floor || r.mean_log2_adjusted <= floor;
    const double gap = std::fabs(r.mean_log2_adjusted - r.mean_log2_mc);
    if (!at_floor && gap > kC3MaxLog2Ratio) agree = false;
    char buf[160];
    std::snprintf(buf, sizeof buf, "\n    shift=%.1f log2 calibrated=%.2f mc=%.2f |ratio|=%.2f%s", r.x,
                  r.mean_log2_adjusted, r.mean_log2_mc, gap, at_floor ? " (floor reached)" : "");
    detail += buf;
  }
  const double secs = sw.seconds();
  report(3, agree && secs < kC3Seconds, secs,
         std::string("mean |log2 calibrated/mc| <= 1 before the floor: ") + (agree ? "yes" : "no") +
             detail);
}

// --------------------------------------------------------------------------

void criterion4(std::uint64_t seed) {
  const Stopwatch sw;
  struct Case {
    const char* name;
    sim::NullKind kind;
    double q;
  };
  const double inf = NormSpec::infinity;
  const std::vector<Case> cases{{"L1", sim::NullKind::curves, 1.0},     {"L2", sim::NullKind::curves, 2.0},
                                {"Linf", sim::NullKind::curves, inf},   {"S1", sim::NullKind::operators, 1.0},
                                {"S2", sim::NullKind::operators, 2.0}, {"Sinf", sim::NullKind::operators, inf}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    sim::NullCalibrationConfig cfg;
    cfg.kind = c.kind;
    cfg.q = c.q;
    cfg.reps = kC4Reps;
    cfg.n = c.kind == sim::NullKind::curves ? 30 : 20;
    cfg.seed = seed;
    const auto reps = sim::run_null_calibration(cfg);
    std::vector<double> adj;
    std::vector<double> raw;
    for (const auto& r : reps) {
      adj.push_back(r.p_adjusted);
      raw.push_back(r.p_raw);
    }
    const auto ks = sim::ks_uniform(adj);
    const auto ks_raw = sim::ks_uniform(raw);
    const bool ok = ks.p_value >= kC4Level;
    pass = pass && ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "\n    %-4s KS p adjusted=%.4f raw=%.2g %s", c.name, ks.p_value,
                  ks_raw.p_value, ok ? "ok" : "rejected");
    detail += buf;
  }
  const double secs = sw.seconds();
  report(4, pass && secs < kC4Seconds, secs, "adjusted null p-values vs Uniform[0,1] at level 0.01" + detail);
}

// --------------------------------------------------------------------------

void criterion5(std::uint64_t seed) {
  const Stopwatch sw;
  sim::ProcrustesConfig cfg;
  cfg.gamma = grid(0.0, 6.0, 0.5);
  cfg.seed = seed;
  const auto rows = sim::summarize(sim::run_procrustes(cfg));
  std::vector<double> x;
  std::vector<double> adj;
  std::vector<double> mc;
  for (const auto& r : rows) {
    x.push_back(r.x);
    adj.push_back(r.mean_p_adjusted);
    mc.push_back(r.mean_p_mc);
  }
  const double rho_adj = sim::spearman(x, adj);
  const double rho_mc = sim::spearman(x, mc);
  const double floor = 2.0 / static_cast<double>(cfg.mc_perms + 1);
  double worst = 1.0;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool above = mc[i] > floor;
    const double factor = std::max(adj[i] / mc[i], mc[i] / adj[i]);
    if (above) worst = std::max(worst, factor);
    char buf[160];
    std::snprintf(buf, sizeof buf, "\n    gamma=%.1f mean p adj=%.4g mc=%.4g factor=%.2f%s", x[i], adj[i], mc[i],
                  factor, above ? "" : " (mc floor)");
    detail += buf;
  }
  const bool pass =
      rho_adj <= kC5MaxSpearman && rho_mc <= kC5MaxSpearman && worst <= kC5MaxFactor && sw.seconds() < kC5Seconds;
  char head[200];
  std::snprintf(head, sizeof head, "spearman adj=%.3f mc=%.3f (<= -0.9); worst factor above mc floor=%.2f (<= 4)",
                rho_adj, rho_mc, worst);
  report(5, pass, sw.seconds(), head + detail);
}

// --------------------------------------------------------------------------

void criterion6(std::uint64_t seed) {
  const Stopwatch sw;
  std::size_t within = 0;
  for (std::size_t i = 0; i < kC6Instances; ++i) {
    auto rng = substream(seed, Stream::data, 10000 + i);
    const std::size_t n = 8 + 2 * (i % 3);
    const std::size_t m1 = i % 4 == 3 ? n / 2 - 1 : n / 2;
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = z(rng) + (j < m1 ? 0.3 * static_cast<double>(i % 5) : 0.0);
    const UnivariateStatistic stat(v);
    const StatisticFn f = [&stat](std::span<const Sign> a) { return stat.evaluate(a); };
    const double t = stat.evaluate(canonical_signs(m1, n - m1));
    const double exact = exhaustive_pvalue(f, t, n, m1);
    const auto mc = mc_pvalue(f, t, n, m1, kC6Perms, derive_seed(seed, Stream::monte_carlo, i));
    const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(kC6Perms));
    if (std::fabs(mc.p_hat - exact) <= 3.0 * se) ++within;
  }
  const double frac = static_cast<double>(within) / static_cast<double>(kC6Instances);

  std::mt19937_64 rng(derive_seed(seed, Stream::data, 20000));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst_beta = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double a = std::pow(10.0, -1.0 + 3.0 * u01(rng));
    const double b = std::pow(10.0, -1.0 + 3.0 * u01(rng));
    const double x = u01(rng);
    worst_beta = std::max(worst_beta, std::fabs(reg_inc_beta(x, BetaParams(a, b)) -
                                                oracle::inc_beta_quadrature(x, a, b)));
  }
  double worst_lgamma = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double x = std::pow(10.0, -3.0 + 9.0 * u01(rng));
    const double ref = oracle::lgamma_stirling(x);
    worst_lgamma = std::max(worst_lgamma, std::fabs(log_gamma(x) - ref) / std::max(1.0, std::fabs(ref)));
  }
  double worst_schatten = 0.0;
  for (unsigned s = 0; s < 50; ++s) {
    std::mt19937_64 mr(s);
    std::normal_distribution<double> z;
    Eigen::MatrixXd a(5 + s % 4, 4 + s % 3);
    for (auto& e : a.reshaped()) e = z(mr);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
    for (const double q : {1.0, 2.0, 3.0, NormSpec::infinity}) {
      const double ref = std::isinf(q) ? sv.maxCoeff() : std::pow(sv.array().pow(q).sum(), 1.0 / q);
      const double got = schatten_norm(a, NormSpec(NormSpec::Space::schatten, q));
      worst_schatten = std::max(worst_schatten, std::fabs(got - ref) / ref);
    }
  }
  double worst_path = 0.0;
  for (unsigned s = 0; s < 20; ++s) {
    const SymOperator sa(oracle::random_psd(6, 100 + s));
    const SymOperator sb(oracle::random_psd(6, 200 + s));
    const double e0 = (covariance_path(sa, sb, 0.0).matrix() - sa.matrix()).cwiseAbs().maxCoeff();
    const double e1 = (covariance_path(sa, sb, 1.0).matrix() - sb.matrix()).cwiseAbs().maxCoeff();
    worst_path = std::max({worst_path, e0, e1});
  }
  const double secs = sw.seconds();
  const bool pass = frac >= kC6MinWithin && worst_beta <= kC6IncBetaTol && worst_lgamma <= kC6LogGammaTol &&
                    worst_schatten <= kC6SchattenTol && worst_path <= kC6PathTol && secs < kC6Seconds;
  char buf[300];
  std::snprintf(buf, sizeof buf,
                "mc within 3 se of exact: %.3f (>= 0.99); inc beta err %.2e; log gamma rel err %.2e; "
                "schatten rel err %.2e; path endpoint err %.2e",
                frac, worst_beta, worst_lgamma, worst_schatten, worst_path);
  report(6, pass, secs, buf);
}

// --------------------------------------------------------------------------

void criterion7() {
  const Stopwatch sw;
  const BetaParams p = analytic_beta_params(SampleSplit(8, 8));
  const double c0_ref = std::sqrt(2.0) * boost::math::tgamma(2.0) / boost::math::tgamma(2.5);
  const bool params_ok = p.alpha() == 2.0 && p.beta() == 0.5 && std::fabs(*p.c0() - c0_ref) <= kC7Tol &&
                         std::fabs(*p.c0() - 1.06385) <= 5e-6;
  const double bound =
      univariate_tail_bound(TestStatistic{1.0, 1.0, StatisticKind::univariate}, SampleSplit(8, 8));
  const bool bound_ok = std::fabs(bound - std::exp(-1.0)) <= kC7Tol;
  const double d = std::sqrt(1.0 / 24.0);
  const std::vector<double> uni{0.5 - d, 0.5 + d};
  const BetaParams m = mom_beta(uni);
  const bool mom_ok = std::fabs(m.alpha() - 1.0) <= kC7Tol && std::fabs(m.beta() - 1.0) <= kC7Tol;
  char buf[200];
  std::snprintf(buf, sizeof buf, "alpha=%.17g beta=%.17g C0=%.9f; bound(n=16,t=1)=%.12f; mom=(%.12f, %.12f)",
                p.alpha(), p.beta(), *p.c0(), bound, m.alpha(), m.beta());
  report(7, params_ok && bound_ok && mom_ok, sw.seconds(), buf);
}

// --------------------------------------------------------------------------

void criterion8(std::uint64_t seed) {
  const Stopwatch sw;
  sim::CrbdBenchConfig cfg;
  cfg.seed = seed;
  const auto r = sim::run_crbd_bench(cfg);
  const double secs = sw.seconds();
  const bool pass = r.pairings == 66 && r.mc_permutations == 132000 &&
                    r.analytic_decompositions <= kC8MaxAnalyticDecompositions &&
                    r.per_perm_decompositions == kC8PerPermDecompositions && r.speedup >= kC8MinSpeedup &&
                    secs < kC8Seconds;
  char buf[300];
  std::snprintf(buf, sizeof buf,
                "pairings=%zu analytic decompositions=%llu (<= 300) per-permutation decompositions=%llu "
                "(== 264) analytic %.3f s, extrapolated mc %.1f s, speedup %.0fx (>= 100)",
                r.pairings, static_cast<unsigned long long>(r.analytic_decompositions),
                static_cast<unsigned long long>(r.per_perm_decompositions), r.analytic_seconds,
                r.mc_extrapolated_seconds, r.speedup);
  report(8, pass, secs, buf);
}

}  // namespace

int main() {
  const std::uint64_t seed = default_seed();
  std::printf("acceptance seed %llu\n", static_cast<unsigned long long>(seed));
  const std::vector<std::function<void()>> criteria{
      [&] { criterion1(seed); }, [&] { criterion2(seed); }, [&] { criterion3(seed); },
      [&] { criterion4(seed); }, [&] { criterion5(seed); }, [&] { criterion6(seed); },
      [] { criterion7(); },      [&] { criterion8(seed); }};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, 0.0, std::string("error: ") + e.what());
    }
  }
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
